"""Configuration-driven experiment runner.

Verbs: generate (constraint system + phantom only), run (a full experiment),
compare (two trace CSVs), inspect (summary of a stored system).  Experiments
are described by flat "key = value" config files with '#' comments; every
key can be overridden on the command line as --key value.  Generated systems
are cached by a hash of their generation parameters (directory from
--cache-dir, DFSUP_CACHE_DIR, or ~/.cache/dfsup).  Artifact bundles are
written to a temporary directory and renamed into place, so a failed run
leaves nothing partial behind.

Exit codes: 0 success, 1 runtime failure, 2 configuration errors.
"""

import argparse
import hashlib
import os
import shutil
import sys
import tempfile

import numpy as np

from ._backend import backend_name
from .curves import NonMonotoneError, better_targeted, build_curve
from .kaczmarz import FeasibilityConfig, RowOrdering, art_run
from .penalty import PenalizedObjective, ep_coordinate_search
from .superiorize import (
    DirectionSequence,
    GradientDescentProvider,
    StepSchedule,
    SuperiorizationConfig,
    ZeroProvider,
    superiorize_cw,
    superiorize_nonascent,
)
from .system import ImageVector, read_system, write_system
from .target import DomainSpec, HalfSquaredNorm, MedianRoughnessTarget
from .tomo import (
    EllipsePhantom,
    FanGeometry,
    NoiseModel,
    PixelGrid,
    generate,
    rasterize,
    write_pgm,
)
from .trace import read_trace_csv, write_trace_csv


class ConfigError(Exception):
    pass


def _parse_bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_optfloat(s):
    v = str(s).strip().lower()
    return None if v == "auto" else float(s)


# key -> (parser, default)
_KEYS = {
    "grid_width": (int, 64),
    "grid_height": (int, 64),
    "pixel_size": (_parse_optfloat, None),
    "projections": (int, 120),
    "rays_per_projection": (int, 95),
    "source_radius": (_parse_optfloat, None),
    "fan_increment": (_parse_optfloat, None),
    "angle_offset": (float, 0.0),
    "phantom": (str, "default"),
    "noise_sigma": (float, 0.0),
    "noise_seed": (int, 0),
    "relaxation": (float, 0.05),
    "ordering": (str, "bit-reversal"),
    "mode": (str, "cw"),
    "target": (str, "median"),
    "perturbations": (int, 2000),
    "gamma_initial": (float, 0.02),
    "gamma_ratio": (float, 0.99999),
    "provider": (str, "zero"),
    "penalty_weight": (float, 1.0),
    "probe_budget": (int, 10**6),
    "sweeps": (int, 30),
    "slice_lo": (int, 1),
    "slice_hi": (int, -1),
    "domain": (str, "all"),
    "flip_axis": (_parse_bool, False),
    "use_cache": (_parse_bool, True),
    "cache_dir": (str, ""),
}

_MODES = ("none", "cw", "nonascent", "ep")


class ExperimentConfig:
    def __init__(self, values):
        for key, (_, default) in _KEYS.items():
            setattr(self, key, values.get(key, default))
        self._validate()

    @classmethod
    def load(cls, path=None, overrides=None):
        values = {}
        if path is not None:
            values.update(cls._parse_file(path))
        for key, raw in (overrides or {}).items():
            if key not in _KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            parser = _KEYS[key][0]
            try:
                values[key] = parser(raw) if isinstance(raw, str) else raw
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from exc
        return cls(values)

    @staticmethod
    def _parse_file(path):
        values = {}
        try:
            fh = open(path)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        with fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, raw = line.partition("=")
                if not sep:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key = key.strip()
                raw = raw.strip()
                if key not in _KEYS:
                    raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
                try:
                    values[key] = _KEYS[key][0](raw)
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
        return values

    def _validate(self):
        if self.mode not in _MODES:
            raise ConfigError(f"mode must be one of {_MODES}, not {self.mode!r}")
        if self.target not in ("median", "half-norm"):
            raise ConfigError(f"target must be median or half-norm, not {self.target!r}")
        if self.provider not in ("zero", "gradient"):
            raise ConfigError(f"provider must be zero or gradient, not {self.provider!r}")
        if self.provider == "gradient" and self.target != "half-norm":
            raise ConfigError("the gradient provider needs the half-norm test target")
        if self.grid_width < 1 or self.grid_height < 1:
            raise ConfigError("grid dimensions must be positive")
        if self.projections < 1 or self.rays_per_projection < 1:
            raise ConfigError("projection and ray counts must be positive")
        if self.sweeps < 1:
            raise ConfigError("sweeps must be at least 1")
        if self.perturbations < 0:
            raise ConfigError("perturbations must be nonnegative")
        if not 0.0 < self.gamma_ratio < 1.0 or self.gamma_initial <= 0.0:
            raise ConfigError("need gamma_initial > 0 and gamma_ratio in (0, 1)")
        if self.penalty_weight < 0.0:
            raise ConfigError("penalty_weight must be nonnegative")
        if self.noise_sigma < 0.0:
            raise ConfigError("noise_sigma must be nonnegative")
        hi = self.sweeps if self.slice_hi < 0 else self.slice_hi
        if not 1 <= hi <= self.sweeps or self.slice_lo < 0:
            raise ConfigError(f"bad curve slice [{self.slice_lo}, {hi}]")
        if not (self.ordering in ("sequential", "bit-reversal") or self.ordering.startswith("perm:")):
            raise ConfigError("ordering must be sequential, bit-reversal or perm:<file>")
        d = self.domain.split()
        if d[0] not in ("all", "box") or (d[0] == "box" and len(d) != 3):
            raise ConfigError("domain must be 'all' or 'box <lo> <hi>'")

    # resolved helpers -----------------------------------------------------

    def pixel_size_value(self):
        return self.pixel_size if self.pixel_size is not None else 2.0 / self.grid_width

    def grid(self):
        return PixelGrid(self.grid_width, self.grid_height, self.pixel_size_value())

    def geometry(self, grid):
        return FanGeometry.for_grid(
            grid, self.projections, self.rays_per_projection,
            self.source_radius, self.fan_increment, self.angle_offset,
        )

    def phantom_model(self):
        if self.phantom == "default":
            return EllipsePhantom.head_default()
        return EllipsePhantom.from_file(self.phantom)

    def noise(self):
        if self.noise_sigma == 0.0:
            return None
        return NoiseModel(self.noise_sigma, self.noise_seed)

    def feasibility(self):
        if self.ordering == "sequential":
            ordering = RowOrdering("sequential")
        elif self.ordering == "bit-reversal":
            ordering = RowOrdering("bit-reversal", self.projections, self.rays_per_projection)
        else:
            path = self.ordering[len("perm:"):]
            perm = np.loadtxt(path, dtype=np.int64, ndmin=1)
            ordering = RowOrdering("explicit", permutation=perm)
        return FeasibilityConfig(self.relaxation, ordering)

    def domain_spec(self):
        parts = self.domain.split()
        if parts[0] == "all":
            return DomainSpec.all_space()
        return DomainSpec.box(float(parts[1]), float(parts[2]))

    def target_fn(self):
        if self.target == "median":
            return MedianRoughnessTarget(self.grid_width, self.grid_height)
        return HalfSquaredNorm(self.grid_width * self.grid_height)

    def slice_bounds(self):
        # the default slice starts at iterate 1: the shared start vector
        # typically breaks strict proximity decrease; single-sweep runs
        # degrade to [0, 1]
        hi = self.sweeps if self.slice_hi < 0 else self.slice_hi
        return min(self.slice_lo, hi - 1), hi

    def generation_key(self):
        phantom = self.phantom_model()
        grid = self.grid()
        geometry = self.geometry(grid)
        parts = [
            f"grid={grid.width}x{grid.height}@{grid.pixel_size!r}",
            f"geom={geometry.projections}x{geometry.rays_per_projection}"
            f"@{geometry.source_radius!r}/{geometry.fan_increment!r}/{geometry.angle_offset!r}",
            "phantom=" + ";".join(
                f"{e.cx!r},{e.cy!r},{e.ax!r},{e.ay!r},{e.rot!r},{e.density!r}"
                for e in phantom.ellipses
            ),
            f"noise={self.noise_sigma!r}/{self.noise_seed}",
        ]
        return hashlib.sha256("|".join(parts).encode()).hexdigest()

    def metadata(self):
        meta = {}
        for key in sorted(_KEYS):
            if key in ("use_cache", "cache_dir"):
                continue
            value = getattr(self, key)
            if key in ("pixel_size", "source_radius", "fan_increment") and value is None:
                value = "auto"
            meta[key] = str(value)
        meta["backend"] = backend_name()
        return meta

    def dump(self, path):
        with open(path, "w") as fh:
            for key, value in self.metadata().items():
                fh.write(f"{key} = {value}\n")


def cache_directory(config):
    if config.cache_dir:
        return config.cache_dir
    env = os.environ.get("DFSUP_CACHE_DIR", "")
    if env:
        return env
    return os.path.expanduser("~/.cache/dfsup")


def _write_meta(path, system):
    with open(path, "w") as fh:
        fh.write(f"dropped_rows = {system.dropped_rows}\n")
        fh.write("ray_ids = " + " ".join(map(str, system.ray_ids.tolist())) + "\n")


def _read_meta(path, system):
    with open(path) as fh:
        for line in fh:
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key == "dropped_rows":
                system.dropped_rows = int(value)
            elif key == "ray_ids":
                ids = np.asarray([int(tok) for tok in value.split()], dtype=np.int64)
                if ids.size != system.I:
                    raise ValueError(f"{path}: ray id count does not match the system")
                system.ray_ids = ids
    return system


def obtain_system(config, log=lambda msg: None):
    """Generate the constraint system, or reuse a cached copy."""
    grid = config.grid()
    phantom = config.phantom_model()
    cache_dir = cache_directory(config)
    key = config.generation_key()
    sys_path = os.path.join(cache_dir, f"{key}.system.txt")
    meta_path = os.path.join(cache_dir, f"{key}.meta.txt")

    if config.use_cache and os.path.exists(sys_path) and os.path.exists(meta_path):
        log(f"cache hit: {sys_path}")
        system = _read_meta(meta_path, read_system(sys_path))
        return system, rasterize(grid, phantom)

    log("tracing rays...")
    system, image = generate(grid, config.geometry(grid), phantom, config.noise())
    if config.use_cache:
        os.makedirs(cache_dir, exist_ok=True)
        write_system(system, sys_path)
        _write_meta(meta_path, system)
        log(f"cached: {sys_path}")
    return system, image


def run_experiment(config, output_dir, log=lambda msg: None):
    """Run the configured experiment and write its artifact bundle."""
    system, phantom_image = obtain_system(config, log)
    log(f"system: J={system.J} I={system.I} nnz={system.nnz} dropped={system.dropped_rows}")

    start = ImageVector.zeros(config.grid_width, config.grid_height)
    feas = config.feasibility()
    target = config.target_fn()
    meta = config.metadata()
    meta["system_rows"] = str(system.I)

    log(f"running mode={config.mode} sweeps={config.sweeps} backend={backend_name()}")
    if config.mode == "none":
        trace = art_run(system, feas, start, config.sweeps, target, metadata=meta)
    elif config.mode == "cw":
        sup = SuperiorizationConfig(
            config.perturbations, config.sweeps, config.gamma_initial, config.gamma_ratio,
            domain=config.domain_spec(), probe_budget=config.probe_budget,
        )
        trace = superiorize_cw(system, target, sup, feas, start, metadata=meta)
    elif config.mode == "nonascent":
        provider = ZeroProvider() if config.provider == "zero" else GradientDescentProvider(target)
        sup = SuperiorizationConfig(
            config.perturbations, config.sweeps, config.gamma_initial, config.gamma_ratio,
            domain=config.domain_spec(), probe_budget=config.probe_budget,
        )
        trace = superiorize_nonascent(system, target, provider, sup, feas, start, metadata=meta)
    else:  # ep
        roughness = MedianRoughnessTarget(config.grid_width, config.grid_height)
        objective = PenalizedObjective(system, roughness, config.penalty_weight)
        schedule = StepSchedule(config.gamma_initial, config.gamma_ratio)
        directions = DirectionSequence(system.J)
        dom = None if config.domain == "all" else config.domain_spec()
        trace = ep_coordinate_search(
            objective, schedule, directions, start, config.sweeps, domain=dom, metadata=meta
        )
        log(objective.counters.report())

    lo, hi = config.slice_bounds()
    bundle = {}
    with _staging(output_dir) as staging:
        trace_path = os.path.join(staging, "trace.csv")
        write_trace_csv(trace, trace_path)
        final = ImageVector(trace.final, config.grid_width, config.grid_height)
        write_pgm(final, os.path.join(staging, "final.pgm"))
        write_pgm(phantom_image, os.path.join(staging, "phantom.pgm"))
        _curve_svg(trace, lo, hi, os.path.join(staging, "curve.svg"), config.flip_axis)
        config.dump(os.path.join(staging, "config.txt"))
        _summary(trace, lo, hi, system, os.path.join(staging, "summary.txt"))
    for name in ("trace.csv", "final.pgm", "phantom.pgm", "curve.svg", "config.txt", "summary.txt"):
        bundle[name] = os.path.join(output_dir, name)
    log(f"artifacts in {output_dir}")
    return trace, bundle


class _staging:
    """Build artifacts in a temp dir; rename into place only on success."""

    def __init__(self, output_dir):
        self.output_dir = output_dir

    def __enter__(self):
        parent = os.path.dirname(os.path.abspath(self.output_dir)) or "."
        os.makedirs(parent, exist_ok=True)
        if os.path.exists(self.output_dir):
            raise RuntimeError(f"output directory {self.output_dir} already exists")
        self.tmp = tempfile.mkdtemp(prefix=".staging-", dir=parent)
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            os.rename(self.tmp, self.output_dir)
        else:
            shutil.rmtree(self.tmp, ignore_errors=True)
        return False


def _curve_svg(trace, lo, hi, path, flip):
    from .svgplot import plot_curves

    pts = np.column_stack([trace.proximity[lo : hi + 1], trace.target[lo : hi + 1]])
    plot_curves([(f"iterates {lo}..{hi}", pts)], path, flip_x=flip)


def _summary(trace, lo, hi, system, path):
    from .curves import is_monotone_proximity

    last = len(trace) - 1
    lines = [
        f"mode = {trace.metadata.get('mode', '?')}",
        f"iterations = {last}",
        f"system = J:{system.J} I:{system.I} nnz:{system.nnz} dropped:{system.dropped_rows}",
        f"proximity: start {trace.proximity[0]!r} -> final {trace.proximity[last]!r}",
        f"target: start {trace.target[0]!r} -> final {trace.target[last]!r}",
        f"gamma_consumed_total = {float(np.sum(trace.gamma_consumed))!r}",
        f"probes: accepted {int(np.sum(trace.probes_accepted))}, "
        f"rejected {int(np.sum(trace.probes_rejected))}",
        f"monotone_proximity[{lo},{hi}] = {is_monotone_proximity(trace, lo, hi)}",
    ]
    if trace.psi is not None:
        lines.append(f"psi: start {trace.psi[0]!r} -> final {trace.psi[last]!r}")
    if "work_counters" in trace.metadata:
        lines.append(trace.metadata["work_counters"])
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def compare_traces(path_a, path_b, lo, hi, samples=100, svg=None, flip=False, out=sys.stdout):
    """Better-targeted verdict for two stored traces over slice [lo, hi]."""
    trace_a = read_trace_csv(path_a)
    trace_b = read_trace_csv(path_b)
    curve_a = build_curve(trace_a, lo, hi)
    curve_b = build_curve(trace_b, lo, hi)
    verdict = better_targeted(curve_a, curve_b, samples)
    out.write(verdict.report() + "\n")
    if svg:
        from .svgplot import plot_curves

        plot_curves(
            [(os.path.basename(path_a), curve_a.vertices),
             (os.path.basename(path_b), curve_b.vertices)],
            svg, flip_x=flip,
        )
    return verdict


def inspect_system(path, out=sys.stdout):
    system = read_system(path)
    meta_path = path.replace(".system.txt", ".meta.txt")
    if meta_path != path and os.path.exists(meta_path):
        _read_meta(meta_path, system)
    out.write(
        f"J={system.J} I={system.I} nnz={system.nnz} dropped={system.dropped_rows}\n"
        f"rhs: min={system.rhs.min()!r} max={system.rhs.max()!r}\n"
        f"row norms^2: min={system.norms_sq.min()!r} max={system.norms_sq.max()!r}\n"
        f"entries per row: min={int(np.diff(system.indptr).min())} "
        f"max={int(np.diff(system.indptr).max())}\n"
    )


def _add_config_options(parser):
    parser.add_argument("--config", help="key = value config file")
    for key in _KEYS:
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None,
                            metavar="V", help=argparse.SUPPRESS)


def _collect_overrides(args):
    return {key: value for key, value in vars(args).items()
            if key in _KEYS and value is not None}


def build_parser():
    parser = argparse.ArgumentParser(prog="dfsup",
                                     description="derivative-free superiorization toolkit")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_gen = sub.add_parser("generate", help="generate (or fetch cached) system + phantom")
    _add_config_options(p_gen)
    p_gen.add_argument("--output", required=True)

    p_run = sub.add_parser("run", help="run an experiment and write its artifact bundle")
    _add_config_options(p_run)
    p_run.add_argument("--output", required=True)

    p_cmp = sub.add_parser("compare", help="better-targeted verdict for two trace CSVs")
    p_cmp.add_argument("trace_a")
    p_cmp.add_argument("trace_b")
    p_cmp.add_argument("--lo", type=int, default=1)
    p_cmp.add_argument("--hi", type=int, required=True)
    p_cmp.add_argument("--samples", type=int, default=100)
    p_cmp.add_argument("--svg")
    p_cmp.add_argument("--flip-axis", action="store_true")

    p_ins = sub.add_parser("inspect", help="print a summary of a stored system")
    p_ins.add_argument("system")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    log = lambda msg: print(msg, file=sys.stderr)
    try:
        if args.verb in ("generate", "run"):
            config = ExperimentConfig.load(args.config, _collect_overrides(args))
            if args.verb == "run":
                run_experiment(config, args.output, log)
            else:
                system, image = obtain_system(config, log)
                with _staging(args.output) as staging:
                    write_system(system, os.path.join(staging, "system.txt"))
                    _write_meta(os.path.join(staging, "meta.txt"), system)
                    write_pgm(image, os.path.join(staging, "phantom.pgm"))
                    config.dump(os.path.join(staging, "config.txt"))
                log(f"artifacts in {args.output}")
        elif args.verb == "compare":
            compare_traces(args.trace_a, args.trace_b, args.lo, args.hi,
                           args.samples, args.svg, args.flip_axis)
        else:
            inspect_system(args.system)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonMonotoneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures -> exit 1, no partial bundle
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
