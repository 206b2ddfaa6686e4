# %% [markdown]
# # Belief propagation baseline
#
# Flooding sum-product on the Tanner graph, the classical decoder the
# learned one is compared against.

# %%
import numpy as np

from sbecc.bp import TannerGraph, bp_decode_batch
from sbecc.channel import bpsk_modulate
from sbecc.gf2codes import encode, load_code
from sbecc.harness import BPDecoder, HardDecisionDecoder, StopRule, evaluate

# %% [markdown]
# LDPC(49,24): BP against plain hard decisions.

# %%
ldpc = load_code("ldpc49_24")
for dec in (HardDecisionDecoder(ldpc), BPDecoder(ldpc, 50)):
    rep = evaluate(ldpc, dec, [2.0, 3.0, 4.0], StopRule(200, 50_000), seed=0)
    print(f"{dec.name:5s}", "  ".join(f"{p.ebno_db:.0f}dB {p.ber:.2e}" for p in rep.points))

# %% [markdown]
# The 3-row Hamming(7,4) matrix has one column of weight 3. With saturated
# messages, a single flip on that bit drives one flooding sweep to another
# weight-3 codeword, and the early exit accepts it. Moderate evidence
# avoids the trap.

# %%
ham = load_code("hamming74")
g = TannerGraph.from_parity_check(ham.H)
cws = encode(np.array([[(m >> i) & 1 for i in range(4)] for m in range(16)]), ham)
for mag in (2.0, 4.0, 8.0):
    llrs, truth = [], []
    for cw in cws:
        for j in range(7):
            l = mag * bpsk_modulate(cw)
            l[j] = -l[j]
            llrs.append(l)
            truth.append(cw)
    res = bp_decode_batch(np.array(llrs), g, 50)
    ok = (res.bits == np.array(truth)).all(axis=1)
    print(f"|llr|={mag:.0f}: corrected {ok.sum()}/112")
