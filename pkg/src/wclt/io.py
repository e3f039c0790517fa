"""JSON model specifications and array serialization.

Complex numbers are written as ``[re, im]`` pairs and matrices as row-major
nested lists. A model spec looks like::

    {
      "dim": 3,
      "hamiltonian": {"eigenvalues": [0, 1], "multiplicities": [1, 2]},
      "interaction": [[[0, 0], [1, 0], ...], ...],
      "channels": [{"omega": 1.0, "gamma_minus": 2.0, "gamma_plus": 1.0}]
    }

``hamiltonian`` may instead be ``{"matrix": [...]}``. In place of
``channels`` a ``temperature`` entry ``{"c": ..., "beta": ...}`` gives thermal
rates, each value a constant or a list of ``[omega, value]`` pairs.
Channel entries without ``omega`` are assigned to the Bohr frequencies in
ascending order and must then cover all of them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .generator import (
    Rates,
    WcltGenerator,
    bohr_frequencies,
    build_generator,
    thermal_rates,
)
from .linalg import DEFAULT_CLUSTER_TOL, SpectralData, hermitian_eig


class SpecError(ValueError):
    pass


def encode_matrix(A) -> list:
    A = np.asarray(A, dtype=complex)
    if A.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in A]
    return [encode_matrix(row) for row in A]


def decode_matrix(data, name: str = "matrix") -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{name}: expected nested lists of [re, im] pairs") from exc
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise SpecError(f"{name}: entries must be [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


@dataclass
class ModelSpec:
    dim: int
    hamiltonian: dict
    interaction: np.ndarray
    channels: list | None = None
    temperature: dict | None = None
    commutant_term: np.ndarray | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        if not isinstance(data, dict):
            raise SpecError("model spec must be a JSON object")
        unknown = set(data) - {"dim", "hamiltonian", "interaction", "channels", "temperature",
                               "commutant_term", "meta"}
        if unknown:
            raise SpecError(f"unknown keys {sorted(unknown)}")
        try:
            dim = int(data["dim"])
            ham = data["hamiltonian"]
            interaction = decode_matrix(data["interaction"], "interaction")
        except KeyError as exc:
            raise SpecError(f"missing key {exc}") from exc
        if interaction.shape != (dim, dim):
            raise SpecError(f"interaction has shape {interaction.shape}, expected {(dim, dim)}")
        if not isinstance(ham, dict) or not ({"eigenvalues", "multiplicities"} <= set(ham) or "matrix" in ham):
            raise SpecError("hamiltonian needs eigenvalues + multiplicities or matrix")
        if ("channels" in data) == ("temperature" in data):
            raise SpecError("give exactly one of channels or temperature")
        ct = data.get("commutant_term")
        return cls(dim, ham, interaction, data.get("channels"), data.get("temperature"),
                   None if ct is None else decode_matrix(ct, "commutant_term"))

    def to_dict(self) -> dict:
        out = {"dim": self.dim, "hamiltonian": self.hamiltonian,
               "interaction": encode_matrix(self.interaction)}
        if self.channels is not None:
            out["channels"] = self.channels
        else:
            out["temperature"] = self.temperature
        if self.commutant_term is not None:
            out["commutant_term"] = encode_matrix(self.commutant_term)
        return out

    def spectral(self, tol: float = DEFAULT_CLUSTER_TOL) -> SpectralData:
        ham = self.hamiltonian
        if "matrix" in ham:
            H = decode_matrix(ham["matrix"], "hamiltonian")
            if H.shape != (self.dim, self.dim):
                raise SpecError(f"hamiltonian has shape {H.shape}, expected {(self.dim, self.dim)}")
            return hermitian_eig(H, tol)
        sd = SpectralData.from_levels(ham["eigenvalues"], ham["multiplicities"])
        if sd.dim != self.dim:
            raise SpecError(f"multiplicities sum to {sd.dim}, expected {self.dim}")
        return sd

    def build(self, tol: float = DEFAULT_CLUSTER_TOL) -> WcltGenerator:
        spectral = self.spectral(tol)
        if self.temperature is not None:
            rates = thermal_rates(_schedule(self.temperature, "c", tol),
                                  _schedule(self.temperature, "beta", tol),
                                  float(self.temperature.get("zeta_minus", 0.0)),
                                  float(self.temperature.get("zeta_plus", 0.0)))
        else:
            rates = _explicit_rates(self.channels, spectral, tol)
        return build_generator(spectral, self.interaction, rates, tol=tol,
                               commutant_term=self.commutant_term)


def _schedule(temp: dict, key: str, tol: float):
    if key not in temp:
        raise SpecError(f"temperature schedule lacks {key!r}")
    val = temp[key]
    if isinstance(val, (int, float)):
        return float(val)
    table = [(float(w), float(v)) for w, v in val]

    def lookup(omega: float) -> float:
        for w, v in table:
            if abs(w - omega) <= tol * (1 + abs(omega)):
                return v
        raise SpecError(f"temperature schedule {key!r} has no entry for omega={omega}")

    return lookup


def _explicit_rates(channels, spectral: SpectralData, tol: float) -> dict:
    if not isinstance(channels, list):
        raise SpecError("channels must be a list")
    freqs = [f.omega for f in bohr_frequencies(spectral, tol)]
    with_omega = [c for c in channels if "omega" in c]
    if with_omega and len(with_omega) != len(channels):
        raise SpecError("either every channel entry gives omega or none does")
    if not with_omega and len(channels) != len(freqs):
        raise SpecError(f"{len(channels)} channel entries for {len(freqs)} Bohr frequencies")
    out = {}
    for i, c in enumerate(channels):
        omega = float(c["omega"]) if with_omega else freqs[i]
        try:
            out[omega] = Rates(float(c["gamma_minus"]), float(c["gamma_plus"]),
                               float(c.get("zeta_minus", 0.0)), float(c.get("zeta_plus", 0.0)))
        except KeyError as exc:
            raise SpecError(f"channel entry {i} lacks {exc}") from exc
    return out


def model_spec_from_generator(gen: WcltGenerator) -> ModelSpec:
    """Explicit-rate spec that rebuilds ``gen`` operator for operator."""
    sd = gen.spectral
    if sd.levels is not None:
        ham = {"eigenvalues": [e for e, _ in sd.levels], "multiplicities": [m for _, m in sd.levels]}
    else:
        ham = {"matrix": encode_matrix(sd.hamiltonian())}
    channels = [{"omega": ch.omega, "gamma_minus": ch.gamma_minus, "gamma_plus": ch.gamma_plus,
                 "zeta_minus": ch.zeta_minus, "zeta_plus": ch.zeta_plus}
                for ch in gen.channels]
    return ModelSpec(gen.dim, ham, np.array(gen.interaction), channels=channels,
                     commutant_term=None if gen.commutant_term is None else np.array(gen.commutant_term))


def load_spec(path) -> ModelSpec:
    with open(path) as fh:
        return ModelSpec.from_dict(json.load(fh))


def save_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, default=_json_default)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_matrix(obj)
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def load_state(path, dim: int | None = None) -> np.ndarray:
    """Density matrix from a JSON file of [re, im] pairs (or a bare real matrix)."""
    with open(path) as fh:
        data = json.load(fh)
    arr = np.asarray(data, dtype=float)
    rho = arr[..., 0] + 1j * arr[..., 1] if arr.ndim == 3 else arr.astype(complex)
    if dim is not None and rho.shape != (dim, dim):
        raise SpecError(f"state has shape {rho.shape}, expected {(dim, dim)}")
    return rho
