#!/usr/bin/env python3
"""Independent arithmetic check of the secret-key-length golden value.

Evaluates l = floor(s_z0 + s_z1 (1 - h(phi_z)) - f_ec n_z h(q_z)
                    - 6 log2(19/eps_sec) - log2(2/eps_cor))
for the frozen inputs used by the C++ tests, with no code shared with the
implementation. Run with --check to exit nonzero if the frozen golden
drifts.
"""
import math
import sys

GOLDEN_L = 41156120
GOLDEN_H_0005 = 0.0454146923337941
GOLDEN_H_001 = 0.08079313589591118


def h(q: float) -> float:
    if q in (0.0, 1.0):
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def key_length(s_z0, s_z1, phi_z, n_z, q_z, f_ec, eps_sec, eps_cor):
    rhs = (s_z0 + s_z1 * (1.0 - h(phi_z))
           - f_ec * n_z * h(q_z)
           - 6.0 * math.log2(19.0 / eps_sec)
           - math.log2(2.0 / eps_cor))
    return max(0, math.floor(rhs))


def main() -> int:
    l = key_length(s_z0=1e4, s_z1=5e7, phi_z=0.01, n_z=1e8, q_z=0.005,
                   f_ec=1.06, eps_sec=1e-10, eps_cor=1e-12)
    print(f"h(0.005) = {h(0.005)!r}")
    print(f"h(0.01)  = {h(0.01)!r}")
    print(f"l        = {l}")
    if "--check" in sys.argv:
        ok = (l == GOLDEN_L
              and abs(h(0.005) - GOLDEN_H_0005) < 1e-15
              and abs(h(0.01) - GOLDEN_H_001) < 1e-15)
        print("golden check:", "OK" if ok else "MISMATCH")
        return 0 if ok else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
