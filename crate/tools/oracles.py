"""High-precision reference values for the Gaussian seed on [0, 1].

K_t(r) = (E1(r^2/2) - E1(r^2 e^{2t}/2)) / 2,  K_t(0) = t.
Pair integrals use  int_{[0,1]^2} f(|x-y|) = 2 int_0^1 (1 - r) f(r) dr.
"""
from mpmath import mp, mpf, e1, exp, cosh, quad

mp.dps = 30


def kernel(t, r):
    if r == 0:
        return mpf(t)
    a = r * r / 2
    return (e1(a) - e1(a * exp(2 * t))) / 2


def pair_integral(f, t):
    pts = [mpf(0)] + [exp(-t - k) for k in range(6, -1, -1) if exp(-t - k) < 1] + [mpf(1)]
    pts = sorted(set(pts))
    return 2 * quad(lambda r: (1 - r) * f(r), pts)


def second_moment(b2, t):
    return pair_integral(lambda r: cosh(b2 * kernel(t, r)), t)


def second_cumulant(b2, t):
    return pair_integral(lambda r: cosh(b2 * kernel(t, r)) - 1, t)


if __name__ == "__main__":
    for t, r in [(10, mpf("0.1")), (3, mpf("0.5")), (1, mpf("0.01")), (6, mpf("0.002"))]:
        print(f"K_{t}({r}) = {kernel(t, r)}")
    print("M2(beta=0.8, t=3) =", second_moment(mpf("0.64"), 3))
    for b2, t in [("1.2", 5), ("1.2", 7), ("0.8", 7), ("0.8", 8), ("1.5", 6), ("1.5", 7), ("1.5", 8), ("0.8", 3), ("0.5", 2)]:
        print(f"C2(beta^2={b2}, t={t}) =", second_cumulant(mpf(b2), t))
