"""Export one subject of the 40-target Speller benchmark to per-trial CSV files.

The distribution ships one ``S<n>.mat`` per subject with a ``data`` array of
shape (64 channels, 1500 samples, 40 targets, 6 blocks) at 250 Hz; each
epoch starts 0.5 s before stimulus onset. Target frequencies come from
``Freq_Phase.mat``. Channel rows follow the distribution's ``64-channels.loc``;
the default selection is the nine occipital/parieto-occipital channels
(1-based rows there). Check them against your copy of the .loc file.

The output directory holds ``block{b}_target{t}.csv`` files plus
``import.json``; finish with::

    adtrca convert <out> --manifest <out>/import.json --out datasets/S1

The manifest latency is 0.5 s pre-stimulus plus a 140 ms visual delay.
"""
import argparse
import json
from pathlib import Path

import numpy as np
from scipy.io import loadmat

DEFAULT_CHANNELS = "Pz=48,PO5=54,PO3=55,POz=56,PO4=57,PO6=58,O1=61,Oz=62,O2=63"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("subject_mat")
    ap.add_argument("--freq-phase", required=True, help="path to Freq_Phase.mat")
    ap.add_argument("--channels", default=DEFAULT_CHANNELS, help="name=row pairs, rows 1-based")
    ap.add_argument("--fs", type=float, default=250.0)
    ap.add_argument("--pre-stimulus", type=float, default=0.5)
    ap.add_argument("--visual-delay", type=float, default=0.14)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    data = loadmat(args.subject_mat)["data"]
    freqs = np.ravel(loadmat(args.freq_phase)["freqs"]).astype(float)
    pairs = [p.split("=") for p in args.channels.split(",")]
    names = [n for n, _ in pairs]
    rows = [int(i) - 1 for _, i in pairs]
    n_ch, n_t, n_targets, n_blocks = data.shape
    if n_targets != len(freqs):
        raise SystemExit(f"{n_targets} targets in data but {len(freqs)} frequencies")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for b in range(n_blocks):
        for t in range(n_targets):
            trial = data[rows, :, t, b].T  # samples x channels
            np.savetxt(out / f"block{b}_target{t}.csv", trial, delimiter=",", header=",".join(names),
                       comments="", fmt="%.9g")
    manifest = {
        "sampling_rate_hz": args.fs,
        "stimulus_frequencies_hz": [float(f) for f in freqs],
        "channel_names": names,
        "n_blocks": n_blocks,
        "n_targets": n_targets,
        "n_samples": n_t,
        "latency_s": args.pre_stimulus + args.visual_delay,
    }
    (out / "import.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {n_blocks * n_targets} trial files and import.json to {out}")


if __name__ == "__main__":
    main()
