#!/usr/bin/env python3
"""Derive the shipped device-preset constants from two measured anchors.

The presets in include/edgesim/config.hpp are not free-hand numbers: they are
fitted so that two reference runs reproduce measured single-device baselines
exactly (jitter off, one trial):

  * local-only:   completion = w0 + K * s0            and the matching mAh
  * all-offload:  completion = w1 + K * (t1 + s1 + t3) and the matching mAh
                  (stable worker, no mobility)

Everything else in the simulator follows from these constants plus the
protocol model. Two quantities are genuine fit parameters rather than
derivable values, and both are chosen here explicitly:

  * the worker's initial delay w1 - the anchor only pins w1 + K*s1, so the
    split between "start-up delay" and "per-task service" is a modelling
    choice. We use 80 s, which keeps per-offload time low enough that waiting
    out mobility gaps (not task size) dominates round-robin offloading delays.
  * the master's group-owner overhead - local processing while workers are
    attached costs extra (the master also runs the Wi-Fi Direct group). The
    anchors never exercise that path, so the 1.2 multiplier is calibrated
    against the serial mobility scenario instead.

Run with no arguments to print the constants that should appear in
config.hpp.
"""

import argparse
import json

MAH_PER_MAS = 1.0 / 3600.0  # milliamp-seconds to milliamp-hours


def fit_local(completion_s, energy_mah, k, w0):
    """Local-only anchor -> master service time and CPU current."""
    service_s = (completion_s - w0) / k
    busy_s = k * service_s
    cpu_ma = energy_mah / (busy_s * MAH_PER_MAS)
    return service_s, cpu_ma


def fit_offload(completion_s, energy_mah, k, w1, payload_b, result_b, bw_bps, wifi_ma):
    """All-offload anchor -> worker service time and CPU current.

    Both radios are active for the transfer time of each task; the worker CPU
    covers whatever energy the radios do not.
    """
    per_task_s = (completion_s - w1) / k
    transfer_s = (payload_b + result_b) / bw_bps
    service_s = per_task_s - transfer_s
    radio_mah = 2 * k * transfer_s * wifi_ma * MAH_PER_MAS  # master + worker
    cpu_ma = (energy_mah - radio_mah) / (k * service_s * MAH_PER_MAS)
    return service_s, cpu_ma


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=60, help="tasks per anchor run")
    ap.add_argument("--local-completion", type=float, default=674.1425)
    ap.add_argument("--local-energy", type=float, default=32.1214)
    ap.add_argument("--local-start-delay", type=float, default=145.0)
    ap.add_argument("--offload-completion", type=float, default=419.64302)
    ap.add_argument("--offload-energy", type=float, default=24.848508)
    ap.add_argument("--worker-start-delay", type=float, default=80.0,
                    help="fit parameter: the worker's share of the anchor time")
    ap.add_argument("--payload-bytes", type=float, default=2_000_000)
    ap.add_argument("--result-bytes", type=float, default=5_303_583)
    ap.add_argument("--bandwidth-bps", type=float, default=5_000_000)
    ap.add_argument("--wifi-ma", type=float, default=20.0)
    args = ap.parse_args()

    s0, cpu0 = fit_local(args.local_completion, args.local_energy, args.k,
                         args.local_start_delay)
    s1, cpu1 = fit_offload(args.offload_completion, args.offload_energy, args.k,
                           args.worker_start_delay, args.payload_bytes,
                           args.result_bytes, args.bandwidth_bps, args.wifi_ma)

    print(json.dumps({
        "nexus5_master": {
            "mean_service_s": round(s0, 10),
            "cpu_current_mA": round(cpu0, 6),
            "initial_delay_s": args.local_start_delay,
            "group_owner_overhead": 1.2,
        },
        "nexus5_worker": {
            "mean_service_s": round(s1, 6),
            "cpu_current_mA": round(cpu1, 4),
            "initial_delay_s": args.worker_start_delay,
        },
    }, indent=2))

    # sanity: both anchors must round-trip exactly
    assert abs(args.local_start_delay + args.k * s0 - args.local_completion) < 1e-6
    assert abs(args.k * s0 * cpu0 * MAH_PER_MAS - args.local_energy) < 1e-6
    transfer_s = (args.payload_bytes + args.result_bytes) / args.bandwidth_bps
    assert abs(args.worker_start_delay + args.k * (s1 + transfer_s)
               - args.offload_completion) < 1e-6


if __name__ == "__main__":
    main()
