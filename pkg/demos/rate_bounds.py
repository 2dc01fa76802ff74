"""Print the rate bound R(k) for the catalogue gauges at a few iteration counts."""

from karamata import PhiSpec, RateBound
from karamata.rates import entropic_psi, holder_entropic_psi, holder_psi, linear_psi, logarithmic_psi

GAUGES = {
    "linear": linear_psi(1.0),
    "holder(1/2)": holder_psi(1.0, 0.5),
    "holder_entropic": holder_entropic_psi(1.0, 0.01, 1.0),
    "entropic": entropic_psi(1.0),
    "logarithmic(1)": logarithmic_psi(1.0, 1.0),
}
KS = [10, 100, 1_000, 10_000, 100_000]


def main():
    print("gauge".ljust(18) + "".join(f"k={k:<10d}" for k in KS))
    for name, psi in GAUGES.items():
        rb = RateBound.from_spec(PhiSpec(psi), 0.1)
        vals = []
        for k in KS:
            try:
                vals.append(f"{rb(k):<12.4e}")
            except ArithmeticError:
                vals.append(f"{'<1e-150':<12}")
        print(name.ljust(18) + "".join(vals))


if __name__ == "__main__":
    main()
