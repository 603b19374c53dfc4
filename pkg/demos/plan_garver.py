"""Plan the bundled six-bus network against its most robust setting.

Loads the packaged study file, runs the master/worst-case decomposition at
the radius implied by the study's target quantile, and prints the chosen
lines together with the outer-loop trace. Takes a few seconds.

Run:  python3 demos/plan_garver.py
"""

from arotnep import (
    build_uncertainty,
    load_configured_network,
    load_study_config,
    outer_solve,
    phi,
    study_path,
)


def main() -> None:
    cfg = load_study_config(study_path("garver6_study"))
    net = load_configured_network(cfg)
    radius = cfg.radius()
    print(f"network: {net.name} ({len(net.buses)} buses, "
          f"{len(net.candidate_lines)} candidate lines, budget {net.budget:g})")
    print(f"radius {radius:.4f} -> planned non-exceedance {phi(radius):.4f}")
    print()

    es = build_uncertainty(cfg, net)
    plan = outer_solve(net, es, tol=cfg.tolerance, max_outer=cfg.max_outer,
                       inner_tol=cfg.tolerance, max_inner=cfg.max_inner,
                       inner_starts=cfg.inner_starts, seed=cfg.seed,
                       master_gap=cfg.tolerance)

    print(f"{'nu':>3} {'z_lo':>12} {'z_up':>12} {'gap':>10}  built")
    for it in plan.iterations:
        print(f"{it.nu:>3} {it.z_lo:>12.6f} {it.z_up:>12.6f} "
              f"{it.gap:>10.2e}  {' '.join(sorted(it.built)) or '-'}")
    print()
    print(f"status:     {plan.status}")
    print(f"build:      {' '.join(sorted(plan.built))}")
    print(f"investment: {plan.investment:.3f} {net.currency}/yr")
    print(f"worst cost: {plan.worst_cost:.3f} {net.currency}/yr")
    print(f"objective:  {plan.objective:.3f} {net.currency}/yr")
    print(f"worst-case point: {[round(float(v), 2) for v in plan.inner.worst_point]}")


if __name__ == "__main__":
    main()
