// Solve one synthetic LASSO instance with FISTA, RAPID-I and RAPID-II and
// print how quickly each gets within 1e-6 of the best objective found.
//
//   lasso_demo [n] [d] [seed]

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "rapid/rapid.hpp"

int main(int argc, char** argv) {
    using namespace rapid;
    SyntheticSpec spec;
    spec.n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 300;
    spec.d = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 300;
    spec.seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 0;

    RegressionData data = generate_regression(spec);
    data.lambda = default_lambda(data.a, data.y);
    std::printf("n=%zu d=%zu lambda=%.6g\n", spec.n, spec.d, data.lambda);
    const ProblemSpec p = build_lasso(std::move(data));

    const Rule rules[] = {Rule::Fista, Rule::RapidI, Rule::RapidII};
    SolveResult results[3];
    double f_star = estimate_f_star(p, 20000);
    for (int k = 0; k < 3; ++k) {
        SolverConfig cfg;
        cfg.rule = rules[k];
        cfg.max_iter = 5000;
        cfg.rel_tol = 1e-12;
        results[k] = solve(p, cfg, DenseVector(p.dim));
        for (const auto& rec : results[k].trace) f_star = std::min(f_star, rec.f_theta_x);
    }

    std::printf("%-8s %10s %10s %18s\n", "rule", "iters", "to 1e-6", "final objective");
    for (int k = 0; k < 3; ++k) {
        std::size_t hit = 0;
        for (const auto& rec : results[k].trace)
            if (rec.f_theta_x - f_star <= 1e-6 * (1.0 + std::abs(f_star))) {
                hit = rec.t;
                break;
            }
        std::printf("%-8s %10zu %10zu %18.10f\n", std::string(to_string(rules[k])).c_str(), results[k].iterations, hit,
                    p.value(results[k].solution));
    }

    std::size_t nnz = 0;
    for (double v : results[2].solution) nnz += v != 0.0;
    std::printf("nonzeros in solution: %zu of %zu\n", nnz, p.dim);
}
