#!/usr/bin/env python3
"""Extended-precision reference values for the two-parameter Mittag-Leffler function.

Regimes (all evaluated with mpmath, independent of the Rust code paths):

* z >= 0 and moderate negative z: Taylor series at a working precision raised by
  the cancellation estimate |z|^(1/alpha)/ln(10), truncated with a geometric
  tail bound.
* large negative z (|z|^(1/alpha) > 200): the algebraic asymptotic series,
  truncated once the terms fall below 1e-70 relative; the exponentially small
  remainder is O(exp(-|z|^(1/alpha))) < 1e-86.

Spot checks against the Laplace-integral representation and the closed form
E_{1/2,1}(-x) = exp(x^2) erfc(x) are printed at the end.

Outputs (next to this script):
  ml_oracle.csv          alpha,beta,z,value_50digits   (z on a 2000-point grid of [-100, 2])
  ml_oracle_far.csv      same columns, z in [-1e8, -100] and (2, 5]
  ml_oracle_complex.csv  alpha,beta,z_re,z_im,value_re,value_im
"""
import csv
import os
import sys

import mpmath as mp

HERE = os.path.dirname(os.path.abspath(__file__))
ALPHAS = ["0.25", "0.5", "0.75", "0.95"]
OUT_DIGITS = 50


def taylor(alpha, beta, z, target=mp.mpf(10) ** -70):
    """Taylor series with remainder bound. z may be complex."""
    k = 0
    s = mp.mpf(0)
    zk = mp.mpf(1)
    prev = None
    while True:
        term = zk * mp.rgamma(alpha * k + beta)
        s += term
        a = abs(term)
        if k > 5 and prev is not None and a < prev:
            # successive terms ratio ~ |z| Gamma(ak+b)/Gamma(ak+a+b) decreasing
            ratio = abs(z) * mp.gamma(alpha * k + beta) * mp.rgamma(alpha * (k + 1) + beta)
            if ratio < mp.mpf("0.5"):
                tail = abs(zk * z) * mp.rgamma(alpha * (k + 1) + beta) / (1 - ratio)
                if tail <= target * abs(s):
                    return s, tail
        prev = a
        zk *= z
        k += 1
        if k > 200000:
            raise RuntimeError("taylor did not converge")


def asymptotic(alpha, beta, z, target=mp.mpf(10) ** -70):
    """Truncation is steered by the envelope Gamma(1-beta+alpha k)/(pi |z|^k),
    which bounds each term (1/Gamma(x) = sin(pi x) Gamma(1-x)/pi) and, unlike
    the terms themselves, does not dip near the poles of Gamma."""
    s = mp.mpf(0)
    smallest = mp.inf
    for k in range(1, 20000):
        env = mp.gamma(1 - beta + alpha * k) / (mp.pi * abs(z) ** k)
        if env > 1e6 * smallest:
            break
        smallest = min(smallest, env)
        s += -(z ** -k) * mp.rgamma(beta - alpha * k)
        if env <= target * abs(s):
            return s, env
    raise RuntimeError("asymptotic series diverged before reaching target at z=%s" % z)


def laplace_integral(alpha, beta, x):
    """Real negative argument -x via the completely monotone spectral density.

    Substituting r = u^(1/alpha) removes the r^(alpha-1) endpoint singularity.
    """
    t = x ** (1 / alpha)
    c = mp.cos(alpha * mp.pi)
    pref = mp.sin(alpha * mp.pi) / (alpha * mp.pi)

    def f(u):
        r = u ** (1 / alpha)
        w = pref * mp.exp(-r * t) / (u * u + 2 * u * c + 1)
        return w if beta == 1 else w * r

    pts = sorted(set([mp.mpf(0), (1 / t) ** alpha, (10 / t) ** alpha, mp.mpf(1), mp.mpf(10), mp.inf]))
    if beta == 1:
        return mp.quad(f, pts)
    if beta == alpha:
        return t ** (1 - alpha) * mp.quad(f, pts)
    raise ValueError("integral check only for beta in {alpha, 1}")


def reference(alpha, beta, z):
    if z == 0:
        return mp.rgamma(beta)
    t = abs(z) ** (1 / alpha)
    if z > 0 or t <= 200:
        with mp.workdps(80 + int(t / mp.log(10)) + 10):
            v, _ = taylor(alpha, beta, mp.mpf(z))
        return +v
    with mp.workdps(100):
        v, _ = asymptotic(alpha, beta, mp.mpf(z))
    return +v


def fmt(v):
    return mp.nstr(v, OUT_DIGITS, strip_zeros=False, min_fixed=-1, max_fixed=-1)


def real_rows(zs):
    rows = []
    for a_s in ALPHAS:
        alpha = mp.mpf(a_s)
        for beta_s in (a_s, "1"):
            beta = mp.mpf(beta_s)
            for z in zs:
                rows.append((a_s, beta_s, z, fmt(reference(alpha, beta, mp.mpf(z)))))
            sys.stderr.write("alpha=%s beta=%s done\n" % (a_s, beta_s))
    return rows


def grid_main():
    # z_i = -100 + 102 i / 1999, written as decimal strings with 17 significant digits
    zs = [mp.nstr(mp.mpf(-100) + mp.mpf(102) * i / 1999, 17) for i in range(2000)]
    zs[-1] = "2"
    zs[0] = "-100"
    return zs


def far_grid():
    zs = []
    for i in range(60):
        e = mp.mpf(2) + mp.mpf(6) * i / 59  # 10^2 .. 10^8
        zs.append(mp.nstr(-(mp.mpf(10) ** e), 17))
    for i in range(1, 21):
        zs.append(mp.nstr(mp.mpf(2) + mp.mpf(3) * i / 20, 17))
    return zs


def complex_rows():
    rows = []
    for a_s in ("0.3", "0.5", "0.8"):
        alpha = mp.mpf(a_s)
        for r_s in ("0.1", "0.5", "1", "2", "5", "10", "30", "100"):
            for th_s in ("-1.2", "-0.6", "0", "0.6", "1.2"):
                mu = mp.mpf(r_s) * mp.expjpi(mp.mpf(th_s) / mp.pi)
                z = -mu
                t = abs(z) ** (1 / alpha)
                if a_s == "0.5":
                    with mp.workdps(80):
                        v = mp.exp(z * z) * mp.erfc(-z)
                elif t <= 300:
                    with mp.workdps(80 + int(t / mp.log(10)) + 10):
                        v, _ = taylor(alpha, mp.mpf(1), z)
                        v = +v
                else:
                    continue
                rows.append((a_s, "1", mp.nstr(z.real, 20), mp.nstr(z.imag, 20),
                             fmt(v.real), fmt(v.imag)))
    return rows


def cross_checks():
    worst = mp.mpf(0)
    with mp.workdps(80):
        for a_s in ALPHAS:
            alpha = mp.mpf(a_s)
            for beta in (alpha, mp.mpf(1)):
                for x in ("0.3", "2.7", "7.9", "31", "99.5"):
                    ref = reference(alpha, beta, -mp.mpf(x))
                    li = laplace_integral(alpha, beta, mp.mpf(x))
                    rel = abs(ref - li) / abs(ref)
                    worst = max(worst, rel)
        for x in ("0.5", "1", "8", "50", "100"):
            x = mp.mpf(x)
            ref = reference(mp.mpf("0.5"), mp.mpf(1), -x)
            rel = abs(ref - mp.exp(x * x) * mp.erfc(x)) / abs(ref)
            worst = max(worst, rel)
    sys.stderr.write("worst relative disagreement vs independent checks: %s\n" % mp.nstr(worst, 5))
    if worst > mp.mpf(10) ** -35:
        raise SystemExit("cross-check failed")


def write(name, header, rows):
    with open(os.path.join(HERE, name), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


if __name__ == "__main__":
    cross_checks()
    write("ml_oracle_complex.csv", ["alpha", "beta", "z_re", "z_im", "value_re", "value_im"], complex_rows())
    write("ml_oracle_far.csv", ["alpha", "beta", "z", "value_50digits"], real_rows(far_grid()))
    write("ml_oracle.csv", ["alpha", "beta", "z", "value_50digits"], real_rows(grid_main()))
