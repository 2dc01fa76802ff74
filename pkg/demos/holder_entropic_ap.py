"""Alternating projections onto the gamma epigraph and the x-axis.

Compares the observed distance with the shape [W0(sqrt k)]^2 / sqrt(k) and
with the computed rate bound.
"""

from karamata.bench import check_profile_dominance, run_scenario


def main(max_iter=20_000):
    rep = run_scenario({"scenario": "holder_entropic_ap", "stop": {"max_iter": max_iter},
                        "report": {"fit_window": [max_iter / 100, max_iter]}})
    print(f"{'k':>8} {'dist':>12} {'profile':>12} {'bound':>12}")
    for row in rep.rows[::25]:
        k, dist, _, bound, prof = row
        print(f"{int(k):8d} {dist:12.5e} {prof:12.5e} {bound:12.5e}")
    fit, ok, worst = check_profile_dominance(rep, (max_iter / 100, max_iter / 10), (max_iter / 10, max_iter))
    print(f"profile constant {fit.value:.4f}; worst ratio on the later decade {worst:.3f}; dominated: {ok}")
    print(f"Fejer violations: {rep.fejer_violations}")


if __name__ == "__main__":
    main()
