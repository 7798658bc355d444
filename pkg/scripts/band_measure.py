"""Liouville measure of the 2 pi-periodic band {alpha < a} by 2-D quadrature, vs Monte Carlo.

Usage: python3 scripts/band_measure.py [--n 20000] [--seed 0]
"""
import argparse
import math

from scipy import integrate

from revflow.analysis import estimate_measure
from revflow.experiments import packaged_surface_path
from revflow.surface import load_surface


def band_fraction(surface, edge):
    """Fraction of the unit cosphere bundle with equator angle below ``edge``.

    A covector at latitude theta with fibre angle psi has |p_phi| / h =
    cos(theta) |sin(psi)|, so the band is cos(theta) |sin(psi)| > cos(edge).
    """
    c = math.cos(edge)
    f = surface.profile

    def inner_lo(th):
        return math.asin(min(1.0, c / math.cos(th)))

    num, _ = integrate.dblquad(lambda psi, th: math.cos(th) * (1.0 + float(f(th))),
                               -edge, edge, inner_lo, lambda th: math.pi - inner_lo(th),
                               epsabs=1e-13, epsrel=1e-13)
    den, _ = integrate.quad(lambda th: math.cos(th) * (1.0 + float(f(th))),
                            -0.5 * math.pi, 0.5 * math.pi,
                            points=f.breakpoints() or None, epsabs=1e-14, limit=200)
    return 2.0 * num / (2.0 * math.pi * den)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--surface", default=packaged_surface_path("bump"))
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    surface = load_surface(args.surface)
    edge = surface.profile.even_support_infimum
    exact = band_fraction(surface, edge)
    rep = estimate_measure(surface, n=args.n, seed=args.seed, jobs=args.jobs)
    sigma = math.sqrt(exact * (1 - exact) / args.n)
    print(f"band edge alpha = {edge}")
    print(f"quadrature band fraction    {exact:.15f}")
    print(f"Monte-Carlo band fraction   {rep.band_fraction:.5f}  ({(rep.band_fraction - exact) / sigma:+.2f} sigma)")
    print(f"periodic fraction           {rep.periodic_fraction:.5f}  CI {rep.periodic_ci}")
    print(f"nonperiodic fraction        {rep.nonperiodic_fraction:.5f}  CI {rep.nonperiodic_ci}")
    print(f"unresolved (near meridian)  {rep.unresolved_fraction:.5f}")


if __name__ == "__main__":
    main()
