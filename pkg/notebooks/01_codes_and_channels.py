# %% [markdown]
# # Codes and channels
#
# The bundled codes, their GF(2) checks, and what an uncoded receiver sees
# on the AWGN channel.

# %%
import numpy as np

from sbecc.channel import RngStream, awgn_transmit, bpsk_modulate, ebno_to_sigma, rayleigh_transmit
from sbecc.gf2codes import BUILTIN_CODES, encode, gf2_rank, hard_decision, load_code, serialize_alist, syndrome
from sbecc.harness import q_function

# %% [markdown]
# Every bundled code ships as an alist file. Loading one derives a systematic
# generator from H by elimination over GF(2).

# %%
for name in sorted(BUILTIN_CODES):
    code = load_code(name)
    ok = not ((code.G.astype(int) @ code.H.T) % 2).any()
    print(f"{name:12s} n={code.n:2d} k={code.k:2d} rate={code.rate:.3f} "
          f"rank(H)={gf2_rank(code.H)} G.H^T=0: {ok}")

# %%
ham = load_code("hamming74")
print(serialize_alist(ham.H))

# %% [markdown]
# A single flipped bit shows up in the syndrome as the matching column of H.

# %%
cw = encode([1, 0, 1, 1], ham)
for j in range(ham.n):
    e = cw.copy()
    e[j] ^= 1
    print(j, syndrome(e, ham.H), ham.H[:, j])

# %% [markdown]
# Hard decisions on the raw channel output. At 4 dB and rate 1/2 the bit
# error rate should sit on the Gaussian tail Q(1/sigma).

# %%
sigma = ebno_to_sigma(4.0, 0.5)
gen = RngStream(0, 1).generator()
bits = gen.integers(0, 2, 200_000)
y = awgn_transmit(bpsk_modulate(bits), sigma, gen)
print(f"sigma={sigma:.4f}  measured={np.mean(hard_decision(y) != bits):.5f}  Q(1/sigma)={q_function(1 / sigma):.5f}")

# %% [markdown]
# Rayleigh fading with no receiver compensation is much harsher at the same
# Eb/N0.

# %%
for db in (2.0, 4.0, 6.0):
    s = ebno_to_sigma(db, 0.5)
    ya = awgn_transmit(bpsk_modulate(bits), s, RngStream(1, 0))
    yr = rayleigh_transmit(bpsk_modulate(bits), s, RngStream(1, 0))
    print(f"{db:.0f} dB  awgn {np.mean(hard_decision(ya) != bits):.4f}  "
          f"rayleigh {np.mean(hard_decision(yr) != bits):.4f}")
