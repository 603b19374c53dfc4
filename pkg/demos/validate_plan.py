"""Check a planned quantile by simulation.

Solves the bundled single-bus calibration study at the radius matching a
90% target, then draws seeded Gaussian scenarios, prices each one with the
dispatch problem, and compares the fraction of costs below the planned
worst case against the target probability. A text histogram of the
simulated cost distribution is printed.

Run:  python3 demos/validate_plan.py
"""

from arotnep import (
    SimulationStudy,
    build_uncertainty,
    load_configured_network,
    load_study_config,
    outer_solve,
    phi,
    run_simulation,
    study_path,
)


def main() -> None:
    cfg = load_study_config(study_path("onebus_calibration_study"))
    net = load_configured_network(cfg)
    radius = cfg.radius()
    es = build_uncertainty(cfg, net)

    plan = outer_solve(net, es, tol=cfg.tolerance, seed=cfg.seed)
    print(f"planned worst-case cost q* = {plan.worst_cost:.6f} "
          f"at radius {radius:g} (target {phi(radius):.4f})")

    study = SimulationStudy(n_samples=cfg.simulation.samples,
                            seed=cfg.simulation.seed,
                            q_star=plan.worst_cost, radius=radius)
    report = run_simulation(net, plan.built, es, study)

    print(f"samples: {report.n_samples}, seed {report.seed}, "
          f"clipped {report.clipped_samples}, failed {report.failed_samples}")
    print(f"empirical non-exceedance: {report.non_exceedance:.4f}")
    print(f"sample mean {report.mean:.6f}, std {report.std:.6f}")
    print()

    top = max(report.bin_counts)
    for lo, hi, count in zip(report.bin_edges, report.bin_edges[1:],
                             report.bin_counts):
        bar = "#" * round(40 * count / top)
        marker = " <- q*" if lo <= report.q_star < hi else ""
        print(f"[{lo:9.4f}, {hi:9.4f}) {count:4d} {bar}{marker}")


if __name__ == "__main__":
    main()
