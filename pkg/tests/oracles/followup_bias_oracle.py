"""One-off brute-force run: bias of the unweighted KM when simulations stop
at the observed end of follow-up.

Uses only the true data-generating process (exponential events per risk
group, Weibull(2, 5) censoring), a hand-written product-limit loop, and no
code from the package. Writes ``tests/data/followup_bias_oracle.json``.

    python tests/oracles/followup_bias_oracle.py
"""

import json
import math
from pathlib import Path

import numpy as np

RATES = {"active": (0.05, 2.0), "placebo": (0.2, 2.0)}  # (low, high)
PER_GROUP = 500
REPLICATES = 400
SEED = 7


def weibull(rng, n):
    return 2.0 * (-np.log(rng.random(n))) ** (1 / 5)


def km_at(times, events, t_eval):
    # literal product-limit loop, events before censorings at ties
    order = sorted(range(len(times)), key=lambda i: (times[i], not events[i]))
    at_risk = len(times)
    s = 1.0
    k = 0
    while k < len(order):
        t = times[order[k]]
        if t > t_eval:
            break
        d = 0
        m = 0
        while k < len(order) and times[order[k]] == t:
            d += events[order[k]]
            m += 1
            k += 1
        if d:
            s *= 1 - d / at_risk
        at_risk -= m
    return s


def main():
    rng = np.random.default_rng(SEED)
    out = {"replicates": REPLICATES, "seed": SEED, "t": 1.0, "arms": {}}
    for arm, (lam_low, lam_high) in RATES.items():
        lam = np.repeat([lam_low, lam_high], PER_GROUP)
        n = lam.size
        x_obs = np.minimum(rng.exponential(1 / lam), weibull(rng, n))
        means = []
        for _ in range(REPLICATES):
            t = rng.exponential(1 / lam)
            c = weibull(rng, n)
            beyond = (c > x_obs) & (t > x_obs)
            delta = ~beyond & (c >= t)
            x = np.where(beyond, x_obs, np.where(delta, t, c))
            means.append(km_at(x.tolist(), delta.tolist(), 1.0))
        truth = 0.5 * math.exp(-lam_low) + 0.5 * math.exp(-lam_high)
        # large-sample limit: risk set in group g shrinks like S_g(t)^2 * Sc(t)^2
        limit = math.sqrt(0.5 * math.exp(-2 * lam_low) + 0.5 * math.exp(-2 * lam_high))
        out["arms"][arm] = {
            "mean_km_at_t": float(np.mean(means)),
            "mc_sd_of_mean": float(np.std(means, ddof=1) / math.sqrt(REPLICATES)),
            "true_marginal_at_t": truth,
            "asymptotic_biased_km_at_t": limit,
            "bias": float(np.mean(means)) - truth,
        }
    path = Path(__file__).resolve().parents[1] / "data" / "followup_bias_oracle.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
