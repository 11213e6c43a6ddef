"""Reference Mittag-Leffler values by high-precision power series (mpmath).

Frozen into test_mlf.cpp; rerun to regenerate.
"""
import mpmath as mp

mp.mp.dps = 250


def ml(alpha, beta, z):
    alpha, beta, z = mp.mpf(alpha), mp.mpf(beta), mp.mpf(z)
    s = mp.mpf(0)
    k = 0
    while True:
        term = z**k / mp.gamma(alpha * k + beta)
        s += term
        if k > 10 and abs(term) < mp.mpf(10) ** (-60):
            return s
        k += 1


CASES = [
    (1.0, 1.0, 1.0),
    (0.5, 1.0, -1.0),
    (0.5, 1.0, 2.0),
    (0.5, 1.0, -3.0),
    (0.5, 1.0, -10.0),
    (0.3, 1.0, -2.0),
    (0.8, 1.0, -20.0),
    (0.9, 0.9, -50.0),
    (0.5, 0.5, -4.0),
    (0.7, 1.2, -6.0),
    (0.25, 1.0, -1.5),
    (1.5, 1.0, -2.0),
    (2.0, 1.0, -4.0),
    (0.6, 1.0, 3.0),
]

if __name__ == "__main__":
    for a, b, z in CASES:
        print(f"{{{a}, {b}, {z}, {mp.nstr(ml(a, b, z), 17)}}},")
    print("erfc identity", mp.nstr(mp.exp(1) * mp.erfc(1), 20))
