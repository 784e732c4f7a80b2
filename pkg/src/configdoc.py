"""
configdoc.py — JSON experiment documents

    {
      "problem": {"name": "noisy_quadratic", "params": {"eigenvalues": [1, 4], "sigma": 0.5}},
      "method":  {"class": "stochastic_lmo",
                  "set": {"geometry": "euclidean", "radius": 1.0},
                  "schedule": "thm1"},
      "run":     {"T": 1024, "seeds": 20},
      "output":  {"dir": "runs/thm1"}
    }

"method" may also be a list of method blocks and "run.T" a list of horizons
(both for sweeps). A method block carries either "params" or "schedule".
Unknown keys are rejected; every error names the field and, when the key
can be found in the text, its line and column.
"""

import json
import logging
import re
from dataclasses import dataclass, field
from json.decoder import scanstring
from pathlib import Path
from typing import Any

from src.config import cfg
from src.errors import ConfigError, LmoError
from src.lmo import Geometry, LmoSet, OpMethod
from src.optimizer import MethodClass, UnifiedParams
from src.problems import PROBLEMS, build_problem
from src.runner import RunConfig
from src.schedules import DEFAULT_FIXED_BETA, SCHEDULE_NAMES, schedule_method

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class _Key:
    default: Any
    doc: str
    required: bool = False


# Documented keys with defaults; also the source of `reference()`.
SCHEMA: dict[str, dict[str, _Key]] = {
    "problem": {
        "name": _Key(None, f"problem family: {', '.join(PROBLEMS)}", required=True),
        "params": _Key({}, "keyword arguments of the problem factory (e.g. eigenvalues, sigma, seed)"),
    },
    "method": {
        "class": _Key(None, f"method class: {', '.join(m.value for m in MethodClass)}", required=True),
        "set": _Key({}, "constraint set block (see method.set)"),
        "params": _Key(None, "explicit constant hyperparameters (see method.params); exclusive with schedule"),
        "schedule": _Key(None, f"theorem schedule: {', '.join(SCHEDULE_NAMES)}; exclusive with params"),
        "schedule_options": _Key({}, f"beta1 (interval override) and beta (cor4 fixed momentum, default {DEFAULT_FIXED_BETA})"),
        "lambda": _Key(0.0, "weight decay used with a schedule"),
    },
    "method.set": {
        "geometry": _Key("euclidean", f"ball geometry: {', '.join(g.value for g in Geometry)}"),
        "radius": _Key(1.0, "ball radius r > 0"),
        "op_method": _Key("exact_svd", f"operator-norm oracle: {', '.join(o.value for o in OpMethod)}"),
        "ns_iterations": _Key(cfg.ns_iterations, "quintic Newton-Schulz steps (LMO_NS_ITERATIONS)"),
    },
    "method.params": {
        "eta": _Key(None, "w-step size eta2; eta1 derived from the class (igt: eta/(1-beta2))"),
        "eta1": _Key(None, "transport step size (defaults from eta)"),
        "eta2": _Key(None, "w-step size (defaults to eta)"),
        "beta1": _Key(0.0, "query momentum, 0 <= beta1 <= beta2"),
        "beta2": _Key(0.0, "buffer momentum, < 1"),
        "alpha1": _Key(0.0, "query correction weight (variance_reduced only)"),
        "alpha2": _Key(0.0, "buffer correction weight (variance_reduced only)"),
        "lambda": _Key(0.0, "weight decay, lambda*eta1 <= 1 and lambda*eta2 <= 1"),
    },
    "run": {
        "T": _Key(None, "horizon, or a list of horizons for sweep", required=True),
        "seed": _Key(0, "first sample-stream seed"),
        "seeds": _Key(1, "number of seeds (seed .. seed+seeds-1)"),
        "stride": _Key(1, "trace row stride; t = 0 and t = T are always recorded"),
    },
    "output": {
        "dir": _Key(None, "output directory (default LMO_OUTPUT_DIR, overridden by --out)"),
    },
}


def reference() -> str:
    """Generated reference of every key and its default."""
    lines = ["# Config document reference", ""]
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for name, key in keys.items():
            default = "required" if key.required else json.dumps(key.default)
            lines.append(f"  {name:<17} {default:<12} {key.doc}")
        lines.append("")
    return "\n".join(lines)


@dataclass(frozen=True)
class MethodSpec:
    method: MethodClass
    lmo_set: LmoSet
    params: UnifiedParams | None = None
    schedule: str | None = None
    schedule_options: dict = field(default_factory=dict)
    lam: float = 0.0

    @property
    def label(self) -> str:
        return f"{self.method.value}-{self.schedule or 'explicit'}"

    def echo(self) -> dict:
        out = {
            "class": self.method.value,
            "set": {"geometry": self.lmo_set.geometry.value, "radius": self.lmo_set.radius,
                    "op_method": self.lmo_set.op_method.value,
                    "ns_iterations": self.lmo_set.ns_iterations},
        }
        if self.schedule is not None:
            out.update(schedule=self.schedule, schedule_options=dict(self.schedule_options),
                       **{"lambda": self.lam})
        else:
            out["params"] = self.params.to_dict()
        return out


@dataclass(frozen=True)
class ConfigDocument:
    problem: str
    problem_params: dict
    methods: list[MethodSpec]
    horizons: list[int]
    seed: int = 0
    seeds: int = 1
    stride: int = 1
    output_dir: str | None = None

    def run_config(self, method: MethodSpec, T: int, seeds: int | None = None) -> RunConfig:
        return RunConfig(
            problem=self.problem, problem_params=dict(self.problem_params),
            method=method.method, lmo_set=method.lmo_set, T=T,
            params=method.params, schedule=method.schedule,
            schedule_options=dict(method.schedule_options), lam=method.lam,
            seed=self.seed, seeds=self.seeds if seeds is None else seeds, stride=self.stride,
        )

    def single(self) -> tuple[MethodSpec, int]:
        """The one (method, T) pair of a run/certify document."""
        if len(self.methods) != 1:
            raise ConfigError(f"expected exactly one method block, got {len(self.methods)}", field="method")
        if len(self.horizons) != 1:
            raise ConfigError(f"expected a single horizon, got {self.horizons}", field="run.T")
        return self.methods[0], self.horizons[0]

    def echo(self) -> dict:
        return {
            "problem": {"name": self.problem, "params": self.problem_params},
            "method": [m.echo() for m in self.methods],
            "run": {"T": self.horizons, "seed": self.seed, "seeds": self.seeds, "stride": self.stride},
        }


# ── Key positions ─────────────────────────────────────────────────────────

_WS = re.compile(r"[ \t\n\r]*")
_PARENT = re.compile(r"(^|\.)[^.\[]*$|\[\d+\]$")


def _key_offsets(text: str) -> dict[str, int]:
    """
    Offset of every object key in a valid JSON text, by field path
    ("method[1].params.eta"). Keys are resolved inside their enclosing
    object, so a repeated name in another block never shadows this one.
    """
    decoder = json.JSONDecoder()
    offsets: dict[str, int] = {}

    def skip(i: int) -> int:
        return _WS.match(text, i).end()

    def walk(i: int, path: str) -> int:
        i = skip(i)
        if text[i] == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, end = scanstring(text, i + 1)
                child = f"{path}.{key}" if path else key
                offsets.setdefault(child, i)
                i = walk(skip(end) + 1, child)
                i = skip(i)
                if text[i] == "}":
                    return i + 1
                i = skip(i + 1)
        if text[i] == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = skip(walk(i, f"{path}[{k}]"))
                if text[i] == "]":
                    return i + 1
                i, k = i + 1, k + 1
        return decoder.raw_decode(text, i)[1]

    walk(0, "")
    return offsets


# ── Parsing ───────────────────────────────────────────────────────────────

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self._offsets: dict[str, int] | None = None

    def error(self, message: str, path: str, anchor: str | None = None) -> ConfigError:
        """ConfigError for field `path`, positioned at `anchor` (default: the field itself)."""
        line, col = self._locate(anchor or path)
        return ConfigError(message, field=path, line=line, column=col)

    def _locate(self, path: str) -> tuple[int | None, int | None]:
        if self._offsets is None:
            self._offsets = _key_offsets(self.text)
        path = path.removeprefix("$").removeprefix(".")
        # fall back to the closest enclosing key that is present
        while path and path not in self._offsets:
            path = _PARENT.sub("", path, count=1)
        if not path:
            return None, None
        idx = self._offsets[path]
        line = self.text.count("\n", 0, idx) + 1
        col = idx - (self.text.rfind("\n", 0, idx) + 1) + 1
        return line, col

    def section(self, data: Any, path: str, schema: dict[str, _Key]) -> dict:
        if not isinstance(data, dict):
            raise self.error(f"expected an object, got {type(data).__name__}", path)
        for key in data:
            if key not in schema:
                raise self.error(f"unknown key '{key}'; expected one of {sorted(schema)}",
                                 f"{path}.{key}")
        out = {}
        for name, entry in schema.items():
            if name in data:
                out[name] = data[name]
            elif entry.required:
                raise self.error(f"missing required key '{name}'", f"{path}.{name}", path)
            else:
                out[name] = entry.default
        return out

    def number(self, value: Any, path: str, integer: bool = False) -> float | int:
        ok = isinstance(value, int) if integer else isinstance(value, (int, float))
        if isinstance(value, bool) or not ok:
            raise self.error(f"expected {'an integer' if integer else 'a number'}, got {value!r}", path)
        return int(value) if integer else float(value)

    def method(self, data: Any, path: str) -> MethodSpec:
        m = self.section(data, path, SCHEMA["method"])
        try:
            method = MethodClass(m["class"])
        except ValueError:
            raise self.error(f"unknown method class {m['class']!r}", f"{path}.class") from None

        s = self.section(m["set"], f"{path}.set", SCHEMA["method.set"])
        try:
            lmo_set = LmoSet(geometry=s["geometry"], radius=self.number(s["radius"], f"{path}.set.radius"),
                             op_method=s["op_method"],
                             ns_iterations=self.number(s["ns_iterations"], f"{path}.set.ns_iterations", True))
        except ValueError as e:
            raise self.error(str(e), f"{path}.set") from e

        if (m["params"] is None) == (m["schedule"] is None):
            raise self.error("a method block needs exactly one of 'params' and 'schedule'", path, f"{path}.class")

        if m["schedule"] is not None:
            name = m["schedule"]
            if name not in SCHEDULE_NAMES:
                raise self.error(f"unknown schedule {name!r}; expected one of {list(SCHEDULE_NAMES)}",
                                 f"{path}.schedule")
            if schedule_method(name) is not method:
                raise self.error(f"schedule '{name}' belongs to {schedule_method(name).value}, "
                                 f"not {method.value}", f"{path}.schedule")
            opts = m["schedule_options"]
            if not isinstance(opts, dict) or not set(opts) <= {"beta1", "beta"}:
                raise self.error("schedule_options accepts only 'beta1' and 'beta'",
                                 f"{path}.schedule_options")
            opts = {k: self.number(v, f"{path}.schedule_options.{k}") for k, v in opts.items()}
            return MethodSpec(method=method, lmo_set=lmo_set, schedule=name, schedule_options=opts,
                              lam=self.number(m["lambda"], f"{path}.lambda"))

        return MethodSpec(method=method, lmo_set=lmo_set, params=self.params(m["params"], f"{path}.params", method))

    def params(self, data: Any, path: str, method: MethodClass) -> UnifiedParams:
        p = self.section(data, path, SCHEMA["method.params"])
        nums = {k: (None if v is None else self.number(v, f"{path}.{k}")) for k, v in p.items()}
        eta2 = nums["eta2"] if nums["eta2"] is not None else nums["eta"]
        if eta2 is None:
            raise self.error("one of 'eta' and 'eta2' is required", path)
        eta1 = nums["eta1"]
        if eta1 is None:
            eta1 = eta2 / (1.0 - nums["beta2"]) if method is MethodClass.IGT and nums["beta2"] < 1 else eta2
        try:
            params = UnifiedParams(eta1=eta1, eta2=eta2, beta1=nums["beta1"], beta2=nums["beta2"],
                                   alpha1=nums["alpha1"], alpha2=nums["alpha2"], lam=nums["lambda"])
            return method.check(params)
        except LmoError as e:
            raise self.error(str(e), path) from e

    def document(self) -> ConfigDocument:
        try:
            data = json.loads(self.text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno) from e
        top = self.section(data, "$", {"problem": _Key(None, "", True), "method": _Key(None, "", True),
                                       "run": _Key({}, ""), "output": _Key({}, "")})

        prob = self.section(top["problem"], "problem", SCHEMA["problem"])
        if prob["name"] not in PROBLEMS:
            raise self.error(f"unknown problem {prob['name']!r}; expected one of {sorted(PROBLEMS)}",
                             "problem.name")
        if not isinstance(prob["params"], dict):
            raise self.error("expected an object", "problem.params")
        try:
            build_problem(prob["name"], dict(prob["params"]))
        except (TypeError, ValueError) as e:
            raise self.error(str(e), "problem.params") from e

        blocks = top["method"] if isinstance(top["method"], list) else [top["method"]]
        if not blocks:
            raise self.error("at least one method block is required", "method")
        methods = [self.method(b, f"method[{i}]" if isinstance(top["method"], list) else "method")
                   for i, b in enumerate(blocks)]

        run = self.section(top["run"], "run", SCHEMA["run"])
        horizons = run["T"] if isinstance(run["T"], list) else [run["T"]]
        horizons = [self.number(T, "run.T", integer=True) for T in horizons]
        if not horizons or min(horizons) < 1:
            raise self.error(f"horizons must be >= 1, got {horizons}", "run.T")
        if any(m.schedule is not None for m in methods) and min(horizons) < 2:
            raise self.error("theorem schedules need T >= 2", "run.T")
        seed = self.number(run["seed"], "run.seed", integer=True)
        seeds = self.number(run["seeds"], "run.seeds", integer=True)
        stride = self.number(run["stride"], "run.stride", integer=True)
        if seeds < 1 or stride < 1:
            raise self.error("seeds and stride must be >= 1", "run")

        out = self.section(top["output"], "output", SCHEMA["output"])
        return ConfigDocument(problem=prob["name"], problem_params=dict(prob["params"]), methods=methods,
                              horizons=horizons, seed=seed, seeds=seeds, stride=stride,
                              output_dir=out["dir"])


def parse_config(text: str) -> ConfigDocument:
    return _Parser(text).document()


def load_config(path: str | Path) -> ConfigDocument:
    """Read and validate a config document; every problem raises ConfigError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    doc = parse_config(text)
    logger.info(f"Loaded config {path}: {doc.problem}, {len(doc.methods)} method(s), T={doc.horizons}")
    return doc
