"""
Application Settings Module
---------------------------
Centralized configuration: runtime settings from environment variables and
the typed sections of a simulation run file.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from dotenv import load_dotenv

from core.exceptions import ConfigRangeError

# Load environment variables from .env file
load_dotenv()


SCHEMES = ("reformulated", "classical")
LAMBDA_PROFILES = ("constant", "tanh")
INITIAL_CONDITIONS = ("harmonic-mode", "two-mode", "random-seeded", "from-snapshot")
FORCING_KINDS = ("zero", "single-mode", "snapshot")


@dataclass
class RuntimeSettings:
    """Process-level settings that never influence numerical results."""

    threads: int = 1
    log_level: str = "INFO"
    output_dir: str = "output"

    @classmethod
    def from_environment(cls) -> "RuntimeSettings":
        """Load runtime settings from environment variables."""
        return cls(
            threads=int(os.getenv("QGHS_THREADS", "1")),
            log_level=os.getenv("QGHS_LOG_LEVEL", "INFO").upper(),
            output_dir=os.getenv("QGHS_OUTPUT_DIR", "output"),
        )

    def validate(self) -> bool:
        return self.threads >= 1 and self.log_level in ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass
class GridConfig:
    """Discretization: grid.L_h, grid.Nx, grid.Ny, grid.Nz, grid.Zmax."""

    length_h: float = 1.0
    n_x: int = 32
    n_y: int = 32
    n_z: int = 16
    z_max: float = 8.0

    def validate(self) -> None:
        for key, count in (("grid.Nx", self.n_x), ("grid.Ny", self.n_y)):
            if count < 4 or count % 2:
                raise ConfigRangeError(key, f"must be an even integer >= 4, got {count}")
        if self.n_z < 4:
            raise ConfigRangeError("grid.Nz", f"must be >= 4, got {self.n_z}")
        if self.length_h <= 0:
            raise ConfigRangeError("grid.L_h", f"must be positive, got {self.length_h}")
        if self.z_max <= 0:
            raise ConfigRangeError("grid.Zmax", f"must be positive, got {self.z_max}")


@dataclass
class LambdaConfig:
    """Stratification profile: lambda.profile plus its parameters."""

    profile: str = "constant"
    value: float = 1.0
    surface: float = 1.0
    deep: float = 2.0
    depth: float = 2.0
    width: float = 0.5

    def validate(self) -> None:
        if self.profile not in LAMBDA_PROFILES:
            raise ConfigRangeError("lambda.profile", f"must be one of {LAMBDA_PROFILES}")
        if self.profile == "constant" and self.value <= 0:
            raise ConfigRangeError("lambda.value", f"must be positive, got {self.value}")
        if self.profile == "tanh":
            for key, number in (
                ("lambda.surface", self.surface),
                ("lambda.deep", self.deep),
                ("lambda.width", self.width),
            ):
                if number <= 0:
                    raise ConfigRangeError(key, f"must be positive, got {number}")


@dataclass
class InitialConfig:
    """Initial stream function: init.kind plus recipe parameters."""

    kind: str = "two-mode"
    amplitude: float = 1.0
    mode_1: Tuple[int, int] = (1, 0)
    mode_2: Tuple[int, int] = (1, 1)
    amplitude_2: float = 0.5
    max_mode: int = 3
    snapshot: str = ""

    def validate(self) -> None:
        if self.kind not in INITIAL_CONDITIONS:
            raise ConfigRangeError("init.kind", f"must be one of {INITIAL_CONDITIONS}")
        if self.kind == "from-snapshot" and not self.snapshot:
            raise ConfigRangeError("init.snapshot", "required for from-snapshot")
        if self.max_mode < 1:
            raise ConfigRangeError("init.max_mode", f"must be >= 1, got {self.max_mode}")


@dataclass
class ForcingConfig:
    """Forcing recipes for f_L and f_nu."""

    kind: str = "zero"
    interior_amplitude: float = 0.0
    surface_amplitude: float = 0.0
    mode: Tuple[int, int] = (1, 0)
    interior_snapshot: str = ""
    surface_snapshot: str = ""

    def validate(self) -> None:
        if self.kind not in FORCING_KINDS:
            raise ConfigRangeError("forcing.kind", f"must be one of {FORCING_KINDS}")
        if self.kind == "snapshot" and not (self.interior_snapshot or self.surface_snapshot):
            raise ConfigRangeError("forcing.interior_snapshot", "snapshot forcing needs a file")
        if self.kind == "single-mode" and self.mode == (0, 0):
            raise ConfigRangeError("forcing.mode", "single-mode forcing must avoid k = 0")


@dataclass
class SolverConfig:
    """
    Time integration and regularization: solver.{eps,delta,beta,dt,T,cfl,scheme}.

    Attributes:
        eps: Hyperviscosity coefficient of the symbol -eps(|k| + |k|^3).
        delta: Horizontal mollification length of the advecting velocity.
        beta: Beta-plane coefficient.
        dt: Time step.
        final_time: Integration horizon T.
        cfl: Safety factor in (0, 1].
        scheme: "reformulated" or "classical".
    """

    eps: float = 0.0
    delta: float = 0.0
    beta: float = 0.0
    dt: float = 0.01
    final_time: float = 1.0
    cfl: float = 0.5
    scheme: str = "reformulated"

    def validate(self) -> None:
        if not self.dt > 0:
            raise ConfigRangeError("solver.dt", f"must be positive, got {self.dt}")
        if self.final_time < 0:
            raise ConfigRangeError("solver.T", f"must be >= 0, got {self.final_time}")
        if self.eps < 0:
            raise ConfigRangeError("solver.eps", f"must be >= 0, got {self.eps}")
        if self.delta < 0:
            raise ConfigRangeError("solver.delta", f"must be >= 0, got {self.delta}")
        if not 0 < self.cfl <= 1:
            raise ConfigRangeError("solver.cfl", f"must lie in (0, 1], got {self.cfl}")
        if self.scheme not in SCHEMES:
            raise ConfigRangeError("solver.scheme", f"must be one of {SCHEMES}")

    @property
    def n_steps(self) -> int:
        """Number of steps to reach final_time (the last step may be shorter)."""
        ratio = self.final_time / self.dt
        steps = int(round(ratio))
        return steps if abs(ratio - steps) < 1e-9 else int(ratio) + 1


@dataclass
class OutputConfig:
    """Output schedule: output.dir, output.diagnostics_every, output.snapshot_every, output.checkpoint_every."""

    directory: str = ""
    diagnostics_every: int = 1
    snapshot_every: int = 0
    checkpoint_every: int = 0

    def validate(self) -> None:
        for key, value in (
            ("output.diagnostics_every", self.diagnostics_every),
            ("output.snapshot_every", self.snapshot_every),
            ("output.checkpoint_every", self.checkpoint_every),
        ):
            if value < 0:
                raise ConfigRangeError(key, f"must be >= 0, got {value}")

    def resolve_directory(self, runtime: RuntimeSettings) -> Path:
        return Path(self.directory or runtime.output_dir)


@dataclass
class ExperimentConfig:
    """Parameters of the probe-picard and stability-sweep subcommands: experiment.*."""

    eps_sequence: Tuple[float, ...] = (0.1, 0.05, 0.025, 0.0125, 0.00625)
    amplitudes: Tuple[float, ...] = (1e-2, 1e-3)
    spans: Tuple[float, ...] = (0.01, 0.02, 0.05, 0.1, 0.2)
    pairs: int = 2

    def validate(self) -> None:
        if not self.eps_sequence:
            raise ConfigRangeError("experiment.eps_sequence", "must not be empty")
        if any(value < 0 for value in self.eps_sequence):
            raise ConfigRangeError("experiment.eps_sequence", "entries must be >= 0")
        if any(later > earlier for earlier, later in zip(self.eps_sequence, self.eps_sequence[1:])):
            raise ConfigRangeError("experiment.eps_sequence", "must be non-increasing")
        if any(value <= 0 for value in self.amplitudes):
            raise ConfigRangeError("experiment.amplitudes", "entries must be positive")
        if not self.spans or any(value <= 0 for value in self.spans):
            raise ConfigRangeError("experiment.spans", "entries must be positive")
        if self.pairs < 1:
            raise ConfigRangeError("experiment.pairs", f"must be >= 1, got {self.pairs}")


@dataclass
class AppSettings:
    """Master container: runtime settings plus the default run sections."""

    app_name: str = "qghalfspace"
    version: str = "1.0.0"

    runtime: RuntimeSettings = field(default_factory=RuntimeSettings)

    @classmethod
    def load(cls) -> "AppSettings":
        """
        Load application settings from environment.

        Returns:
            Fully populated AppSettings instance.
        """
        return cls(
            app_name=os.getenv("APP_NAME", "qghalfspace"),
            version=os.getenv("APP_VERSION", "1.0.0"),
            runtime=RuntimeSettings.from_environment(),
        )

    def validate_all(self) -> dict:
        """
        Validate all configuration sections.

        Returns:
            Dictionary with validation status for each section.
        """
        return {"runtime": self.runtime.validate()}


# Global settings instance for easy access
_settings: Optional[AppSettings] = None


def get_settings() -> AppSettings:
    """
    Get the global application settings instance.

    Returns:
        Cached AppSettings instance.
    """
    global _settings
    if _settings is None:
        _settings = AppSettings.load()
    return _settings


def reload_settings() -> AppSettings:
    """
    Force reload of settings from environment.

    Returns:
        Fresh AppSettings instance.
    """
    global _settings
    load_dotenv(override=True)
    _settings = AppSettings.load()
    return _settings
