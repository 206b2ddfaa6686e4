# %% [markdown]
# # Decoding with early exit
#
# Decoding integrates the learned field from sigma_max down to sigma_min
# and stops as soon as the hard decision satisfies every parity check.

# %%
import numpy as np

from sbecc.channel import RngStream, awgn_transmit, bpsk_modulate, ebno_to_sigma
from sbecc.denoiser import init_model
from sbecc.gf2codes import encode, hard_decision, load_code, syndrome
from sbecc.harness import HardDecisionDecoder, SbeccDecoder, StopRule, evaluate
from sbecc.solver import SolverConfig, decode
from sbecc.trainer import TrainConfig, train

code = load_code("hamming74")
model = train(init_model(7, 3, seed=0), TrainConfig(seed=0), code).model
solver = SolverConfig("euler", 10)

# %% [markdown]
# One frame, step by step. Watch the syndrome go to zero.

# %%
gen = RngStream(3, 0).generator()
x0 = bpsk_modulate(encode([1, 0, 1, 1], code))
y = x0.copy()
y[2] = -0.4 * x0[2]  # one weakly flipped symbol
res = decode(y, code, model, solver, record_trajectory=True)
for i, x in enumerate(res.trajectory):
    print(i, np.round(x, 2), syndrome(hard_decision(x), code.H))
print("stop at", res.stop_iteration, "converged", res.converged, "bits", res.bits)

# %% [markdown]
# Over many frames, the decoder needs fewer steps at higher SNR.

# %%
rep = evaluate(code, SbeccDecoder(code, model, solver), [4.0, 5.0, 6.0], StopRule(10**9, 20_000), seed=1)
hd = evaluate(code, HardDecisionDecoder(code), [4.0, 5.0, 6.0], StopRule(10**9, 20_000), seed=1)
for p, q in zip(rep.points, hd.points):
    print(f"{p.ebno_db:.0f} dB  -ln BER {p.neg_ln_ber:.3f} (hard {q.neg_ln_ber:.3f})  "
          f"steps {p.stop_iter_mean:.2f} +- {p.stop_iter_std:.2f}  undetected {p.undetected_errors}")
