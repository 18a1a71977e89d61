"""Batch corpus augmentation: selection, transform dispatch, manifest, features."""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from hearaug.audio_io import AudioBuffer, Calibration, read_wav, wav_encoding, write_wav
from hearaug.features import mean_normalize, mel_features, spec_augment_mask
from hearaug.pipeline import METHODS, AugmentOutcome, AugmentSettings, augment_samples
from hearaug.sampling import Severity, derive_stream


@dataclass(frozen=True)
class AugmentConfig:
    """Batch run configuration."""

    input_dir: Path
    output_dir: Path
    method: str = "both"
    severity: Severity = Severity.MODERATE
    prob: float = 0.5
    master_seed: int = 0
    jobs: int = 1
    dump_features: bool = False
    calibration: Calibration = Calibration()
    manifest_path: Path | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"prob must be in [0, 1], got {self.prob}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")

    def settings(self) -> AugmentSettings:
        return AugmentSettings(
            method=self.method,
            severity=self.severity,
            prob=self.prob,
            master_seed=self.master_seed,
            calibration=self.calibration,
        )


@dataclass
class ManifestEntry:
    """One manifest line; params are present only for augmented utterances."""

    utterance_id: str
    input_path: str
    output_path: str | None
    augmented: bool
    method: str
    severity: str
    smearing: dict | None = None
    audiogram: dict | None = None
    degenerate_draw: bool = False
    clip_count: int = 0
    error: str | None = None

    def to_json(self) -> str:
        record = {
            "utterance_id": self.utterance_id,
            "input_path": self.input_path,
            "output_path": self.output_path,
            "augmented": self.augmented,
            "method": self.method,
            "severity": self.severity,
            "degenerate_draw": self.degenerate_draw,
            "clip_count": self.clip_count,
        }
        if self.augmented:
            params = {}
            if self.smearing is not None:
                params["smearing"] = self.smearing
            if self.audiogram is not None:
                params["audiogram"] = self.audiogram
            record["params"] = params
        if self.error is not None:
            record["error"] = self.error
        return json.dumps(record)


def _dump_features(buf: AudioBuffer, utterance_id: str, out_dir: Path, master_seed: int) -> None:
    feats = mean_normalize(mel_features(buf))
    mask_rng = derive_stream(master_seed, f"{utterance_id}#specaugment")
    feats = spec_augment_mask(feats, mask_rng) if feats.size else feats
    raw = feats.astype("<f4")
    raw.tofile(out_dir / f"{utterance_id}.feat")
    sidecar = {
        "frames": int(feats.shape[0]),
        "channels": int(feats.shape[1]),
        "sample_rate": buf.sample_rate,
        "utterance_id": utterance_id,
    }
    (out_dir / f"{utterance_id}.feat.json").write_text(json.dumps(sidecar), encoding="utf-8")


def _process_utterance(wav_name: str, config: AugmentConfig) -> ManifestEntry:
    utterance_id = Path(wav_name).stem
    in_path = config.input_dir / wav_name
    out_path = config.output_dir / wav_name
    entry = ManifestEntry(
        utterance_id=utterance_id,
        input_path=wav_name,
        output_path=wav_name,
        augmented=False,
        method=config.method,
        severity=config.severity.value,
    )
    try:
        buf = read_wav(in_path)
        samples, outcome = augment_samples(buf.samples, buf.sample_rate, utterance_id, config.settings())
        if outcome.augmented:
            out_buf = AudioBuffer(samples, buf.sample_rate)
            entry.clip_count = write_wav(out_path, out_buf, format=wav_encoding(in_path))
            entry.augmented = True
            entry.degenerate_draw = outcome.degenerate_draw
            if outcome.smearing is not None:
                entry.smearing = {"r_l": outcome.smearing.r_l, "r_u": outcome.smearing.r_u}
            if outcome.audiogram is not None:
                entry.audiogram = {
                    "freqs": list(outcome.audiogram.freqs),
                    "thresholds_db": list(outcome.audiogram.thresholds_db),
                }
        else:
            shutil.copyfile(in_path, out_path)
            out_buf = buf
        if config.dump_features:
            _dump_features(out_buf, utterance_id, config.output_dir, config.master_seed)
    except Exception as exc:
        entry.error = f"{type(exc).__name__}: {exc}"
        entry.output_path = None
    return entry


def run(config: AugmentConfig) -> dict:
    """Augment every WAV in ``input_dir`` exactly once; returns count summary.

    Unreadable inputs are logged in the manifest with an error field and the
    run continues. The manifest is written in utterance-id order so output
    bytes are independent of worker count and input listing order.
    """
    if not config.input_dir.is_dir():
        raise FileNotFoundError(f"input directory not found: {config.input_dir}")
    wav_names = sorted(p.name for p in config.input_dir.glob("*.wav"))
    if not wav_names:
        raise FileNotFoundError(f"no WAV files in {config.input_dir}")
    config.output_dir.mkdir(parents=True, exist_ok=True)

    if config.jobs == 1:
        entries = [_process_utterance(name, config) for name in wav_names]
    else:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            entries = list(pool.map(_process_utterance, wav_names, [config] * len(wav_names)))

    entries.sort(key=lambda e: e.utterance_id)
    manifest_path = config.manifest_path or (config.output_dir / "manifest.jsonl")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(entry.to_json() + "\n")

    summary = {
        "total": len(entries),
        "augmented": sum(e.augmented for e in entries),
        "copied": sum(not e.augmented and e.error is None for e in entries),
        "errors": sum(e.error is not None for e in entries),
        "manifest": str(manifest_path),
    }
    return summary


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="augment",
        description="Apply hearing-impairment-inspired augmentation to a WAV corpus.",
    )
    parser.add_argument("--input-dir", required=True, type=Path)
    parser.add_argument("--output-dir", required=True, type=Path)
    parser.add_argument("--method", choices=METHODS, default="both")
    parser.add_argument("--severity", choices=[s.value for s in Severity], default="moderate")
    parser.add_argument("--prob", type=float, default=0.5, help="per-utterance augmentation probability")
    parser.add_argument("--seed", type=int, default=0, help="master seed for all random draws")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")
    parser.add_argument("--manifest", type=Path, default=None, help="manifest path (default: OUTPUT_DIR/manifest.jsonl)")
    parser.add_argument("--dump-features", action="store_true", help="dump masked log-mel features next to outputs")
    parser.add_argument("--full-scale-dbspl", type=float, default=105.0, help="SPL assigned to digital full scale")
    args = parser.parse_args(argv)

    config = AugmentConfig(
        input_dir=args.input_dir,
        output_dir=args.output_dir,
        method=args.method,
        severity=Severity(args.severity),
        prob=args.prob,
        master_seed=args.seed,
        jobs=args.jobs,
        dump_features=args.dump_features,
        calibration=Calibration(full_scale_dbspl=args.full_scale_dbspl),
        manifest_path=args.manifest,
    )
    try:
        summary = run(config)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        "augmented {augmented}/{total} utterances ({copied} copied, {errors} errors); manifest: {manifest}".format(
            **summary
        )
    )
    return 1 if summary["errors"] else 0


if __name__ == "__main__":
    raise SystemExit(main())
