"""Disk cache for solved translational states.

Bound sweeps dominate runtime and are reused across spectrum runs, so
states are persisted keyed by what determines them: the sampled potential
curve, the kinetic coefficient (i.e. the atom mass), and the grid.

Layout: ``<root>/<hash>/index.json`` plus one binary file per state.
``<hash>`` is the first 16 hex digits of a SHA-256 over the channel
fingerprint (grid policy, wall/end/size of the grid, kinetic coefficient,
and a digest of the potential samples).  Each state file holds the
wavefunction as raw little-endian float64 values, one per grid node; its
SHA-256 and the scalar metadata (energy, nu, norm, outer turning point)
live in index.json.

Any mismatch - unreadable index, missing file, checksum or length error -
removes the offending entry (or the whole directory if the index itself
is bad) and raises CacheCorruptionError, so a rerun starts clean.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
from pathlib import Path

import numpy as np

from .eigensolver import Channel, LevelSet, TranslationalState, solve_free_state, solve_level
from .errors import CacheCorruptionError

_FORMAT = 1
ENV_CACHE_DIR = "SURFATOM_CACHE_DIR"


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_CACHE_DIR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "surfatom"


def _channel_fingerprint(ch: Channel) -> dict:
    g = ch.grid
    pol = g.policy
    return {
        "label": ch.label,
        "kinetic_coeff": float(ch.kinetic_coeff),
        "policy": {"inner_step_nm": pol.inner_step_nm,
                   "anchor_nm": pol.anchor_nm,
                   "max_step_nm": pol.max_step_nm},
        "x_wall_nm": float(g.x[0]),
        "x_end_nm": float(g.x[-1]),
        "n_nodes": int(g.x.size),
        "v_sha256": hashlib.sha256(np.ascontiguousarray(ch.v).tobytes()).hexdigest(),
    }


def _state_key(kind: str, nu: int | None, energy_hz: float) -> str:
    if kind == "bound":
        return f"bound:{nu:05d}"
    return f"free:{energy_hz:.17g}"


class EigenstateCache:
    """Load-or-solve wrapper around one cache root directory."""

    def __init__(self, root: str | Path | None = None):
        self.root = Path(root) if root is not None else default_cache_dir()

    def channel_dir(self, ch: Channel) -> Path:
        fp = json.dumps(_channel_fingerprint(ch), sort_keys=True)
        return self.root / hashlib.sha256(fp.encode()).hexdigest()[:16]

    # -- index handling ------------------------------------------------

    def _read_index(self, cdir: Path, ch: Channel) -> dict:
        path = cdir / "index.json"
        if not path.exists():
            return {"format": _FORMAT, "channel": _channel_fingerprint(ch),
                    "states": {}}
        try:
            idx = json.loads(path.read_text())
            if idx["format"] != _FORMAT or not isinstance(idx["states"], dict):
                raise ValueError("bad layout")
        except (ValueError, KeyError, OSError) as exc:
            shutil.rmtree(cdir, ignore_errors=True)
            raise CacheCorruptionError(
                f"unreadable cache index {path} ({exc}); entry removed") from None
        return idx

    def _write_index(self, cdir: Path, idx: dict) -> None:
        tmp = cdir / "index.json.tmp"
        tmp.write_text(json.dumps(idx, sort_keys=True, indent=1))
        os.replace(tmp, cdir / "index.json")

    def _drop(self, cdir: Path, idx: dict, key: str) -> None:
        entry = idx["states"].pop(key, None)
        if entry:
            (cdir / entry["file"]).unlink(missing_ok=True)
        self._write_index(cdir, idx)

    # -- state I/O -----------------------------------------------------

    def _load(self, cdir: Path, idx: dict, key: str,
              ch: Channel) -> TranslationalState | None:
        entry = idx["states"].get(key)
        if entry is None:
            return None
        path = cdir / entry["file"]
        try:
            raw = path.read_bytes()
        except OSError:
            self._drop(cdir, idx, key)
            raise CacheCorruptionError(
                f"missing cache file {path}; entry removed") from None
        if hashlib.sha256(raw).hexdigest() != entry["sha256"]:
            self._drop(cdir, idx, key)
            raise CacheCorruptionError(
                f"checksum mismatch in {path}; entry removed")
        psi = np.frombuffer(raw, dtype="<f8")
        if psi.size != ch.grid.x.size:
            self._drop(cdir, idx, key)
            raise CacheCorruptionError(
                f"wrong state length in {path}; entry removed")
        return TranslationalState(
            kind=entry["kind"],
            nu=entry["nu"],
            energy_hz=entry["energy_hz"],
            grid=ch.grid,
            psi=psi.copy(),
            norm=entry["norm"],
            label=entry["label"],
            x_outer_nm=entry["x_outer_nm"])

    def _store(self, cdir: Path, idx: dict, key: str,
               state: TranslationalState) -> None:
        raw = np.ascontiguousarray(state.psi, dtype="<f8").tobytes()
        fname = key.replace(":", "_").replace(".", "p").replace("+", "") + ".f64"
        tmp = cdir / (fname + ".tmp")
        tmp.write_bytes(raw)
        os.replace(tmp, cdir / fname)
        idx["states"][key] = {
            "file": fname,
            "kind": state.kind,
            "nu": state.nu,
            "energy_hz": float(state.energy_hz),
            "x_outer_nm": None if state.x_outer_nm is None else float(state.x_outer_nm),
            "norm": state.norm,
            "label": state.label,
            "sha256": hashlib.sha256(raw).hexdigest(),
        }
        self._write_index(cdir, idx)

    # -- public API ----------------------------------------------------

    def bound_levels(self, ch: Channel, nus, label: str | None = None) -> LevelSet:
        """Solve-or-load the listed bound levels of one channel."""
        cdir = self.channel_dir(ch)
        cdir.mkdir(parents=True, exist_ok=True)
        idx = self._read_index(cdir, ch)
        states = []
        for nu in nus:
            st = self._load(cdir, idx, _state_key("bound", nu, 0.0), ch)
            if st is None:
                st = solve_level(ch, int(nu))
                self._store(cdir, idx, _state_key("bound", nu, 0.0), st)
            states.append(st)
        return LevelSet(label or ch.label, tuple(states))

    def free_states(self, ch: Channel, energies_hz) -> tuple[TranslationalState, ...]:
        """Solve-or-load continuum states at the given energies."""
        cdir = self.channel_dir(ch)
        cdir.mkdir(parents=True, exist_ok=True)
        idx = self._read_index(cdir, ch)
        out = []
        for e in energies_hz:
            key = _state_key("free", None, float(e))
            st = self._load(cdir, idx, key, ch)
            if st is None:
                st = solve_free_state(ch, float(e))
                self._store(cdir, idx, key, st)
            out.append(st)
        return tuple(out)

    def invalidate(self, ch: Channel | None = None) -> None:
        """Remove one channel's entries, or the whole cache root."""
        target = self.channel_dir(ch) if ch is not None else self.root
        shutil.rmtree(target, ignore_errors=True)
