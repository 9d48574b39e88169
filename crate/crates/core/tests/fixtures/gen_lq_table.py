"""Reference case labels for the L^q multiplier embedding checker.

Exact rational arithmetic; q = "inf" is handled symbolically. Cases (iii) and
(v) are closed upward in q (L^q shrinks as q grows on a finite measure).

    python3 gen_lq_table.py > lq_table.json
"""

import json
from fractions import Fraction as F

INF = "inf"


def q_ge(q, bound):
    """q >= bound, where bound may be INF."""
    if q == INF:
        return True
    if bound == INF:
        return False
    return q >= bound


def q_gt(q, bound):
    if bound == INF:
        return False
    if q == INF:
        return True
    return q > bound


def label(d, s1, s2, q):
    k1, k2 = F(2) * s1 / (d - 1), F(2) * s2 / (d - 1)
    crit = INF if s1 + s2 == 0 else F(d - 1) / (s1 + s2)
    one_is_one = k1 == 1 or k2 == 1
    if k1 < 1 and k2 < 1 and q_ge(q, crit):
        return "i"
    if k1 <= 1 and k2 <= 1 and one_is_one and q_gt(q, crit):
        return "ii"
    if min(k1, k2) < 1 and max(k1, k2) > 1 and q_ge(q, F(2) / (1 + min(k1, k2))):
        return "iii"
    if k1 + k2 > 2 and one_is_one and q_gt(q, F(1)):
        return "iv"
    if k1 > 1 and k2 > 1:
        return "v"
    return "none"


def main():
    s_grid = [F(0), F(1, 4), F(1, 2), F(3, 4), F(1)]
    q_grid = [F(1), F(3, 2), F(2), INF]
    rows = []
    for d in (2, 3):
        for s1 in s_grid:
            for s2 in s_grid:
                for q in q_grid:
                    rows.append({
                        "d": d,
                        "s1": float(s1),
                        "s2": float(s2),
                        "q": q if q == INF else float(q),
                        "case": label(d, s1, s2, q),
                    })
    print(json.dumps(rows, indent=1))


if __name__ == "__main__":
    main()
