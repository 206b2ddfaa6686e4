"""Regenerate the alist files under src/sbecc/data.

Hamming(7,4) and repetition(3,1) are written from their textbook matrices.
BCH(31,16) is the narrow-sense primitive BCH code with designed distance 7
over GF(2^5) (primitive polynomial x^5 + x^2 + 1); its H rows are cyclic
shifts of the reversed parity polynomial h(x) = (x^31 + 1) / g(x).
LDPC(49,24) is a column-weight-3 code built by seeded random edge placement
that rejects length-4 cycles, retried until H has full rank 25.

    python tools/gen_bundled_codes.py
"""

from pathlib import Path

import numpy as np

from sbecc.gf2codes import gf2_rank, serialize_alist

DATA = Path(__file__).resolve().parents[1] / "src" / "sbecc" / "data"


def poly_mul(a, b):
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_divmod(a, b):
    q = 0
    db = b.bit_length()
    while a.bit_length() >= db:
        shift = a.bit_length() - db
        q |= 1 << shift
        a ^= b << shift
    return q, a


def gf32_minimal_poly(power, prim=0b100101):
    # powers of alpha in GF(32)
    exp = [1]
    for _ in range(30):
        v = exp[-1] << 1
        if v & 0b100000:
            v ^= prim
        exp.append(v)
    coset = sorted({(power * 2 ** i) % 31 for i in range(5)})
    # product of (x - alpha^c) with coefficients in GF(32), log tables for mult
    log = {v: i for i, v in enumerate(exp)}

    def mul(a, b):
        if a == 0 or b == 0:
            return 0
        return exp[(log[a] + log[b]) % 31]

    poly = [1]  # coefficients, lowest degree first
    for c in coset:
        root = exp[c]
        nxt = [0] * (len(poly) + 1)
        for i, coef in enumerate(poly):
            nxt[i + 1] ^= coef
            nxt[i] ^= mul(coef, root)
        poly = nxt
    assert all(c in (0, 1) for c in poly)
    return sum(c << i for i, c in enumerate(poly))


def bch_31_16():
    g = 1
    for p in (1, 3, 5):
        g = poly_mul(g, gf32_minimal_poly(p))
    assert g.bit_length() - 1 == 15
    h, rem = poly_divmod((1 << 31) | 1, g)
    assert rem == 0 and h.bit_length() - 1 == 16
    hrev = [(h >> (16 - i)) & 1 for i in range(17)]
    H = np.zeros((15, 31), dtype=np.uint8)
    for r in range(15):
        H[r, r:r + 17] = hrev
    assert gf2_rank(H) == 15
    return H


def ldpc_49_24(seed=2024):
    n, m, dv = 49, 25, 3
    rng = np.random.default_rng(seed)
    while True:
        H = np.zeros((m, n), dtype=np.uint8)
        ok = True
        for j in rng.permutation(n):
            placed = []
            for _ in range(dv):
                weights = H.sum(axis=1).astype(float)
                # a new check must share no earlier variable with the checks
                # already holding column j, otherwise a 4-cycle appears
                cand = [i for i in range(m) if i not in placed
                        and not any((H[i] & H[p]).any() for p in placed)]
                if not cand:
                    ok = False
                    break
                low = min(weights[c] for c in cand)
                best = [c for c in cand if weights[c] == low]
                i = int(rng.choice(best))
                placed.append(i)
                H[i, j] = 1
            if not ok:
                break
        if not ok:
            continue
        # reject 4-cycles anywhere
        overlap = H.astype(int) @ H.T.astype(int)
        np.fill_diagonal(overlap, 0)
        if overlap.max() > 1 or gf2_rank(H) != m:
            continue
        return H


def main():
    hamming = np.array([[1, 1, 0, 1, 1, 0, 0],
                        [1, 0, 1, 1, 0, 1, 0],
                        [0, 1, 1, 1, 0, 0, 1]], dtype=np.uint8)
    rep = np.array([[1, 1, 0], [1, 0, 1]], dtype=np.uint8)
    for name, H in [("hamming_7_4", hamming), ("repetition_3_1", rep),
                    ("bch_31_16", bch_31_16()), ("ldpc_49_24", ldpc_49_24())]:
        (DATA / f"{name}.alist").write_text(serialize_alist(H))
        print(name, H.shape, "rank", gf2_rank(H))


if __name__ == "__main__":
    main()
