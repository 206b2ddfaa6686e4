# %% [markdown]
# # Evaluation reports and SNR gain
#
# The Monte-Carlo harness, its confidence intervals, and the horizontal gain
# between two BER curves.

# %%
from sbecc.denoiser import init_model
from sbecc.gf2codes import load_code
from sbecc.harness import HardDecisionDecoder, SbeccDecoder, StopRule, evaluate, snr_gain
from sbecc.solver import SolverConfig
from sbecc.trainer import TrainConfig, train

code = load_code("hamming74")
model = train(init_model(7, 3, seed=0), TrainConfig(seed=0), code).model
snrs = [3.0, 4.0, 5.0, 6.0]
stop = StopRule(200, 100_000)

# %%
hard = evaluate(code, HardDecisionDecoder(code), snrs, stop, seed=2)
learned = evaluate(code, SbeccDecoder(code, model, SolverConfig("euler", 10)), snrs, stop, seed=2)
print(learned.to_csv(timing=False))

# %% [markdown]
# Every point carries a normal-approximation 95% interval on BER.

# %%
for p, q in zip(learned.points, hard.points):
    print(f"{p.ebno_db:.0f} dB  learned {p.ber:.2e} [{p.ber_ci[0]:.2e}, {p.ber_ci[1]:.2e}]  "
          f"hard {q.ber:.2e} [{q.ber_ci[0]:.2e}, {q.ber_ci[1]:.2e}]")

# %% [markdown]
# How far must the hard-decision curve move to match the learned decoder?
# The gain is at_db minus the Eb/N0 where the reference reaches the new
# curve's value, so a better new decoder comes out negative. Only targets
# inside the reference curve's range can be answered.

# %%
for at in (3.0, 4.0):
    try:
        print(f"gain at {at} dB: {snr_gain(hard.curve(), learned.curve(), at):.2f} dB")
    except ValueError as exc:
        print(f"gain at {at} dB: {exc}")
