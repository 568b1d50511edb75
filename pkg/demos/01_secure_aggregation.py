"""Pool queue statistics from a handful of CVs without revealing any one of them.

Five CVs sit in the zone of interest.  Each turns its state into per-stream
values, splits them into additive shares modulo 2^61 - 1 and sends one share
to every other CV.  The data center only sees the sums of what each CV
received, which add up to the plaintext totals.  With differential privacy on,
each CV also adds a slice of Laplace noise sized so the slices compose into
exactly one Laplace draw.
"""

import numpy as np

from privsignal import (
    CvState, Mode, PrivacyBudget, Sensitivity, coalition_view, plaintext_sums, prepare_record,
    run_round,
)

rng = np.random.default_rng(7)

# (stream, queued?, position in vehicles, arrival time after red start)
cvs = [(1, 1, 2.5, 14.0), (1, 1, 5.5, 31.0), (4, 1, 1.5, 6.0), (4, 0, 0.0, 0.0), (7, 1, 3.5, 22.0)]
records = [prepare_record(CvState.in_stream(k, 8, d, p, t)) for k, d, p, t in cvs]
exact = plaintext_sums(records)
print("exact queued counts per stream:", exact[:8])

res, transcript = run_round(records, Mode.SMPC_ONLY, rng=rng)
print("secure sum (no noise):          ", res.eta_hat)
print(f"messages exchanged: {transcript.share_messages} shares + "
      f"{transcript.submission_messages} submissions")

budget = PrivacyBudget.from_risk(0.05, 40)
sens = [Sensitivity(8.0, 1.0, 60.0)] * 8
noisy, t2 = run_round(records, Mode.SMPC_DP, budget, sens, rng)
print(f"\nwith noise (epsilon={budget.epsilon:.3f}): counts", np.round(noisy.eta_hat, 2))
print("noise scale on counts b =", round(float(noisy.noise_scale["eta"][0]), 3))

# Four colluding CVs see their own shares, but the fifth CV's shares look uniform.
view = coalition_view(t2, [0, 1, 2, 3])
print("\nshares CV 4 sent to the coalition (count of stream 8):", view.received[7, 4, :])
