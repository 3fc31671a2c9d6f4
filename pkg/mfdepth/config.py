"""
Run configuration: defaults, optional JSON or TOML config file, command-line overrides.
"""
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from hashlib import sha256
from typing import List, Optional, Union

from . import MFDepthException
from .depths import DepthConfig, default_beta
from .halfspace import default_n_dirs
from .util import default_workers
from .version import __version__

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

# Keys that do not change any computed value
_unhashed = {"output_dir", "workers", "verbose", "quiet"}


@dataclass
class RunConfig:
    command: Optional[str] = None
    input: Optional[str] = None
    methods: List[str] = field(default_factory=lambda: ["GMFID_wt"])
    n_bins: Union[int, str] = "auto"
    beta: float = default_beta
    n_s: Optional[int] = None
    subsample: bool = True
    robust: bool = True
    min_count: Optional[int] = None
    n_dirs: int = default_n_dirs
    lattice: bool = True
    seed: int = 0
    models: List[str] = field(default_factory=lambda: ["I"])
    outliers: List[str] = field(default_factory=lambda: ["none"])
    sparseness: List[str] = field(default_factory=lambda: ["none"])
    levels: List[str] = field(default_factory=lambda: ["dense"])
    replicates: int = 1
    n_curves: int = 200
    n_times: int = 50
    jitter: float = 0.0
    rate: float = 0.1
    p_s: float = 1.0
    oracle: str = "deepest"
    timing_sizes: List[int] = field(default_factory=list)
    timing_repeats: int = 1
    potential: bool = True
    windows: Optional[int] = None
    raster: int = 100
    bandwidth: Optional[List[float]] = None
    intensity: bool = True
    output_dir: str = "."
    workers: int = field(default_factory=default_workers)
    verbose: bool = False
    quiet: bool = False

    @classmethod
    def keys(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_sources(cls, file_doc=None, overrides=None) -> "RunConfig":
        """
        Build a config from a parsed config file and explicit overrides; overrides win, ``None`` overrides are
        ignored. Unknown keys are an error.
        """
        values = {}
        for source in (file_doc or {}), {k: v for k, v in (overrides or {}).items() if v is not None}:
            unknown = sorted(set(source) - set(cls.keys()))
            if unknown:
                raise MFDepthException(f"Unknown config key(s): {', '.join(unknown)}")
            values.update(source)
        config = cls(**values)
        if config.n_bins != "auto":
            config.n_bins = int(config.n_bins)
        return config

    def to_dict(self):
        return dataclasses.asdict(self)

    @property
    def config_hash(self) -> str:
        doc = {k: v for k, v in self.to_dict().items() if k not in _unhashed}
        return sha256(json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()).hexdigest()[:16]

    @property
    def provenance(self):
        return dict(version=__version__, config_hash=self.config_hash, seed=self.seed, config=self.to_dict())

    def depth_config(self) -> DepthConfig:
        return DepthConfig(
            n_bins=self.n_bins,
            beta=self.beta,
            n_s=self.n_s,
            subsample=self.subsample,
            robust=self.robust,
            min_count=self.min_count,
            n_dirs=self.n_dirs,
            seed=self.seed,
            workers=self.workers,
            lattice=self.lattice,
        )

    def output_path(self, name) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        return os.path.join(self.output_dir, name)


def load_config_file(path):
    """
    Parse a ``.json`` or ``.toml`` config file into a dict.
    """
    if path.endswith(".toml"):
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path) as fh:
        return json.load(fh)
