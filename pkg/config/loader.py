"""
Run File Loader
---------------
Parses the plain-text run files into typed configuration sections and a
RunManifest.

Format: one `key = value` per line, `#` starts a comment. Mode pairs are
written `1, 0`; lists of numbers are comma separated. Every key must be one
of SCHEMA's; anything else is an error naming the key.

Example:
    grid.Nx = 32
    grid.Ny = 32
    grid.Nz = 16
    solver.dt = 0.01
    solver.T = 0.5
    init.kind = two-mode
"""

import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

from dotenv.parser import parse_stream

from config.settings import (
    ExperimentConfig,
    ForcingConfig,
    GridConfig,
    InitialConfig,
    LambdaConfig,
    OutputConfig,
    SolverConfig,
)
from core.exceptions import ConfigKeyError, ConfigParseError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
MANIFEST_VERSION = 1


def _integer(text: str) -> int:
    number = float(text)
    if not number.is_integer():
        raise ValueError(text)
    return int(number)


def _mode(text: str) -> Tuple[int, int]:
    parts = [part for part in text.replace("(", "").replace(")", "").split(",") if part.strip()]
    if len(parts) != 2:
        raise ValueError(text)
    return _integer(parts[0]), _integer(parts[1])


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _text(text: str) -> str:
    return text.strip()


# key -> (section, attribute, converter)
SCHEMA: Dict[str, Tuple[str, str, Callable[[str], Any]]] = {
    "grid.L_h": ("grid", "length_h", float),
    "grid.Nx": ("grid", "n_x", _integer),
    "grid.Ny": ("grid", "n_y", _integer),
    "grid.Nz": ("grid", "n_z", _integer),
    "grid.Zmax": ("grid", "z_max", float),
    "lambda.profile": ("lambda_", "profile", _text),
    "lambda.value": ("lambda_", "value", float),
    "lambda.surface": ("lambda_", "surface", float),
    "lambda.deep": ("lambda_", "deep", float),
    "lambda.depth": ("lambda_", "depth", float),
    "lambda.width": ("lambda_", "width", float),
    "init.kind": ("initial", "kind", _text),
    "init.amplitude": ("initial", "amplitude", float),
    "init.mode_1": ("initial", "mode_1", _mode),
    "init.mode_2": ("initial", "mode_2", _mode),
    "init.amplitude_2": ("initial", "amplitude_2", float),
    "init.max_mode": ("initial", "max_mode", _integer),
    "init.snapshot": ("initial", "snapshot", _text),
    "forcing.kind": ("forcing", "kind", _text),
    "forcing.interior_amplitude": ("forcing", "interior_amplitude", float),
    "forcing.surface_amplitude": ("forcing", "surface_amplitude", float),
    "forcing.mode": ("forcing", "mode", _mode),
    "forcing.interior_snapshot": ("forcing", "interior_snapshot", _text),
    "forcing.surface_snapshot": ("forcing", "surface_snapshot", _text),
    "solver.eps": ("solver", "eps", float),
    "solver.delta": ("solver", "delta", float),
    "solver.beta": ("solver", "beta", float),
    "solver.dt": ("solver", "dt", float),
    "solver.T": ("solver", "final_time", float),
    "solver.cfl": ("solver", "cfl", float),
    "solver.scheme": ("solver", "scheme", _text),
    "output.dir": ("output", "directory", _text),
    "output.diagnostics_every": ("output", "diagnostics_every", _integer),
    "output.snapshot_every": ("output", "snapshot_every", _integer),
    "output.checkpoint_every": ("output", "checkpoint_every", _integer),
    "experiment.eps_sequence": ("experiment", "eps_sequence", _floats),
    "experiment.amplitudes": ("experiment", "amplitudes", _floats),
    "experiment.spans": ("experiment", "spans", _floats),
    "experiment.pairs": ("experiment", "pairs", _integer),
    "seed": ("run", "seed", _integer),
}


def _file_digest(path: str) -> Optional[str]:
    if not path or not Path(path).is_file():
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    """
    Every setting of one run, defaults resolved.

    The hash covers everything that can change a diagnostics byte: the
    numerical sections, the diagnostics interval, the seed and the contents
    of referenced snapshot files. The output directory and the snapshot and
    checkpoint schedules are echoed but not hashed.
    """

    grid: GridConfig = field(default_factory=GridConfig)
    lambda_: LambdaConfig = field(default_factory=LambdaConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    forcing: ForcingConfig = field(default_factory=ForcingConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    seed: int = 0
    source: str = ""

    def validate(self) -> None:
        for section in (self.grid, self.lambda_, self.initial, self.forcing, self.solver, self.output, self.experiment):
            section.validate()

    def numerics(self) -> Dict[str, Any]:
        """The hashed part of the manifest."""
        return {
            "version": MANIFEST_VERSION,
            "grid": asdict(self.grid),
            "lambda": asdict(self.lambda_),
            "init": asdict(self.initial),
            "forcing": asdict(self.forcing),
            "solver": asdict(self.solver),
            "diagnostics_every": self.output.diagnostics_every,
            "experiment": asdict(self.experiment),
            "seed": self.seed,
            "snapshot_digests": {
                "init": _file_digest(self.initial.snapshot) if self.initial.kind == "from-snapshot" else None,
                "forcing_interior": _file_digest(self.forcing.interior_snapshot),
                "forcing_surface": _file_digest(self.forcing.surface_snapshot),
            },
        }

    @property
    def hash(self) -> str:
        payload = json.dumps(self.numerics(), sort_keys=True, default=list)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def to_dict(self) -> Dict[str, Any]:
        return {
            **self.numerics(),
            "output": asdict(self.output),
            "source": self.source,
            "hash": self.hash,
        }

    def write(self, path: PathLike) -> Path:
        """JSON sidecar next to the run outputs."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True, default=list) + "\n")
        return path


def parse_config_text(text: str, source: str = "<string>") -> Tuple[SolverConfig, RunManifest]:
    """
    Parse run-file text.

    Raises:
        ConfigParseError: A malformed line, a duplicate key or a bad value (with line number).
        ConfigKeyError: A key outside SCHEMA.
        ConfigRangeError: A value outside its admissible range.
    """
    manifest = RunManifest(source=source)
    sections = {
        "grid": manifest.grid,
        "lambda_": manifest.lambda_,
        "initial": manifest.initial,
        "forcing": manifest.forcing,
        "solver": manifest.solver,
        "output": manifest.output,
        "experiment": manifest.experiment,
        "run": manifest,
    }
    seen: Dict[str, int] = {}

    for binding in parse_stream(io.StringIO(text)):
        line = binding.original.line
        if binding.error:
            raise ConfigParseError(f"cannot parse {binding.original.string.strip()!r}", line)
        if binding.key is None:
            continue
        key = binding.key
        if key not in SCHEMA:
            raise ConfigKeyError(key, line)
        if binding.value is None or not binding.value.strip():
            raise ConfigParseError(f"'{key}' has no value", line)
        if key in seen:
            raise ConfigParseError(f"'{key}' already set on line {seen[key]}", line)
        seen[key] = line

        section, attribute, convert = SCHEMA[key]
        try:
            value = convert(binding.value)
        except ValueError:
            raise ConfigParseError(f"invalid value for '{key}': {binding.value!r}", line) from None
        setattr(sections[section], attribute, value)

    manifest.validate()
    logger.debug(f"Parsed {len(seen)} keys from {source}")
    return manifest.solver, manifest


def parse_config(path: PathLike) -> Tuple[SolverConfig, RunManifest]:
    """
    Read a run file.

    Args:
        path: Plain-text run file.

    Returns:
        Tuple of (SolverConfig, RunManifest) with all defaults resolved.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigParseError(f"run file not found: {path}")
    solver, manifest = parse_config_text(path.read_text(), source=str(path))
    logger.info(f"Loaded run file {path} (hash {manifest.hash[:12]})")
    return solver, manifest
