#!/usr/bin/env python3
"""Run the brute-force referee over a seeded battery of two-ion gates.

For each case the segmented schedule is normalized onto the pi/4 conditional
phase, integrated exactly in a truncated Fock space, and compared against
both closed-form decay laws. The exact-decay column is the one the
integrator validates; the design-metric column is what the sweeps report.
"""

import numpy as np

from iongate.crystal import Crystal
from iongate.gate import GatePair, build_model
from iongate.oracle import OracleConfig, thermal_fidelity
from iongate.pulses import PulseSchedule

TAU0 = 2.0 * np.pi


def main() -> int:
    crystal = Crystal.build(2)
    pair = GatePair(1, 2)
    rng = np.random.default_rng(20240817)
    print(f"{'mu':>7} {'tau/T':>6} {'nbar':>4} {'numeric':>10} {'design':>10} "
          f"{'exact':>10} {'|d_design|':>10} {'|d_exact|':>10}")
    for case in range(10):
        mu = float(rng.uniform(0.5, 5.0))
        tau_f = float(rng.uniform(0.5, 3.0))
        nbar = (0.0, 1.0, 3.0)[case % 3]
        model = build_model(crystal, pair, tau_f * TAU0, mu, 1, nbar=nbar)
        amps = model.outcome(np.ones(1)).amps
        report = thermal_fidelity(
            OracleConfig(2, PulseSchedule(tau_f * TAU0, mu, amps), pair, nbar=nbar),
            crystal,
        )
        print(
            f"{mu:7.3f} {tau_f:6.3f} {nbar:4.0f} {report.fidelity_numeric:10.6f} "
            f"{report.fidelity_analytic:10.6f} "
            f"{report.fidelity_analytic_exact_decay:10.6f} "
            f"{report.abs_difference:10.2e} {report.abs_difference_exact_decay:10.2e}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
