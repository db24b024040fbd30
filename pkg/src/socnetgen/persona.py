"""Persona sampling from demographic tables, plus transforms and text rendering."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

VARIABLES = ("gender", "age", "race", "religion", "political")
CATEGORICAL = ("gender", "race", "religion", "political")

# variable name -> Persona attribute / JSON key
FIELD = {
    "gender": "gender",
    "age": "age",
    "race": "race_ethnicity",
    "religion": "religion",
    "political": "political",
}
# variable name -> header used in prompt descriptors
HEADER = {
    "gender": "Gender",
    "age": "Age",
    "race": "Race/ethnicity",
    "religion": "Religion",
    "political": "Political affiliation",
}
# variable name -> key used in the interest prompt
INTEREST_KEY = {
    "gender": "gender",
    "age": "age",
    "race": "race/ethnicity",
    "religion": "religion",
    "political": "political affiliation",
}

INTEREST_PROMPT_HEAD = "In 8-12 words, describe the interests of someone with the following demographics:"
INTEREST_PROMPT_TAIL = (
    'Answer by providing ONLY their interests. Do not include filler like "She enjoys" '
    'or "He has a keen interest in".'
)


class ConfigError(ValueError):
    """Invalid or incomplete demographic configuration."""


class InterestGenerationError(RuntimeError):
    """Interest generation failed; ``partial`` holds personas completed so far."""

    def __init__(self, message: str, partial: "PersonaSet"):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class Persona:
    id: int
    gender: str | None = None
    age: int | None = None
    race_ethnicity: str | None = None
    religion: str | None = None
    political: str | None = None
    interests: str | None = None

    def value(self, variable: str):
        return getattr(self, FIELD[variable])

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for v in VARIABLES if self.value(v) is not None)

    def to_dict(self) -> dict:
        out = {"id": self.id}
        for key in ("gender", "age", "race_ethnicity", "religion", "political", "interests"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Persona":
        known = {"id", "gender", "age", "race_ethnicity", "religion", "political", "interests"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown persona fields: {sorted(extra)}")
        return cls(**{k: d[k] for k in known if k in d})


@dataclass(frozen=True)
class PersonaSet:
    personas: tuple[Persona, ...]
    variables: tuple[str, ...] = VARIABLES
    config_hash: str | None = None
    seed: int | None = None

    def __post_init__(self):
        for i, p in enumerate(self.personas):
            if p.id != i:
                raise ValueError(f"persona ids must be 0..N-1; position {i} holds id {p.id}")

    def __len__(self) -> int:
        return len(self.personas)

    def __getitem__(self, i: int) -> Persona:
        return self.personas[i]

    def __iter__(self):
        return iter(self.personas)

    @property
    def has_interests(self) -> bool:
        return any(p.interests is not None for p in self.personas)

    def column(self, variable: str) -> list:
        return [p.value(variable) for p in self.personas]

    def to_json(self) -> list[dict]:
        return [p.to_dict() for p in self.personas]

    @classmethod
    def from_json(cls, records: Sequence[dict]) -> "PersonaSet":
        personas = tuple(Persona.from_dict(r) for r in records)
        present = {v for p in personas for v in p.variables}
        return cls(personas, tuple(v for v in VARIABLES if v in present))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "PersonaSet":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class AgeBand:
    age_min: int
    age_max: int
    p: float

    def contains(self, age: int) -> bool:
        return self.age_min <= age <= self.age_max


@dataclass(frozen=True)
class JointCell:
    gender: str
    race_ethnicity: str
    age_min: int
    age_max: int
    p: float


@dataclass(frozen=True)
class DemographicConfig:
    """Marginal and conditional tables driving :func:`sample_personas`.

    ``political_given_gender_race`` rows are keyed ``"<gender>|<race_ethnicity>"``.
    """

    vocabularies: dict[str, list[str]]
    joint_gar: tuple[JointCell, ...]
    nonbinary_by_age: tuple[AgeBand, ...]
    religion_given_race: dict[str, dict[str, float]]
    political_given_gender_race: dict[str, dict[str, float]]
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_dict(cls, d: dict) -> "DemographicConfig":
        try:
            cfg = cls(
                vocabularies={k: list(v) for k, v in d["vocabularies"].items()},
                joint_gar=tuple(JointCell(**c) for c in d["joint_gar"]),
                nonbinary_by_age=tuple(AgeBand(**b) for b in d.get("nonbinary_by_age", [])),
                religion_given_race={k: dict(v) for k, v in d["religion_given_race"].items()},
                political_given_gender_race={
                    k: dict(v) for k, v in d["political_given_gender_race"].items()
                },
                raw=d,
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed demographic config: {exc}") from exc
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "DemographicConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def bundled(cls) -> "DemographicConfig":
        text = resources.files("socnetgen.data").joinpath("demographics_us.json").read_text("utf-8")
        return cls.from_dict(json.loads(text))

    @property
    def digest(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def validate(self) -> None:
        for key in ("gender", "race_ethnicity", "religion", "political"):
            if key not in self.vocabularies:
                raise ConfigError(f"missing vocabulary for {key!r}")
        vocab = self.vocabularies
        _check_row("joint_gar", {i: c.p for i, c in enumerate(self.joint_gar)})
        for c in self.joint_gar:
            if c.gender not in vocab["gender"] or c.race_ethnicity not in vocab["race_ethnicity"]:
                raise ConfigError(f"joint_gar cell uses undeclared category: {c}")
            if not 0 <= c.age_min <= c.age_max <= 100:
                raise ConfigError(f"joint_gar cell has invalid age band: {c}")
        for b in self.nonbinary_by_age:
            if not 0.0 <= b.p <= 1.0:
                raise ConfigError(f"nonbinary_by_age probability out of range: {b}")
        if self.nonbinary_by_age and "Nonbinary" not in vocab["gender"]:
            raise ConfigError("nonbinary_by_age given but 'Nonbinary' is not a gender category")
        for name, table, key in (
            ("religion_given_race", self.religion_given_race, "religion"),
            ("political_given_gender_race", self.political_given_gender_race, "political"),
        ):
            for row, probs in table.items():
                _check_row(f"{name}[{row}]", probs)
                unknown = set(probs) - set(vocab[key])
                if unknown:
                    raise ConfigError(f"{name}[{row}] uses undeclared categories {sorted(unknown)}")

    def gender_race_age_marginals(self) -> tuple[dict, dict]:
        """Implied marginals of (pre-override) gender and race/ethnicity."""
        g: dict[str, float] = {}
        r: dict[str, float] = {}
        for c in self.joint_gar:
            g[c.gender] = g.get(c.gender, 0.0) + c.p
            r[c.race_ethnicity] = r.get(c.race_ethnicity, 0.0) + c.p
        return g, r

    def nonbinary_probability(self, age: int) -> float:
        for band in self.nonbinary_by_age:
            if band.contains(age):
                return band.p
        return 0.0


def _check_row(name: str, probs: dict) -> None:
    values = np.array(list(probs.values()), dtype=float)
    if values.size == 0:
        raise ConfigError(f"{name} is empty")
    if (values < 0).any():
        raise ConfigError(f"{name} has negative probabilities")
    if abs(values.sum() - 1.0) > 1e-9:
        raise ConfigError(f"{name} sums to {values.sum():.12f}, not 1")


def _draw_conditional(rng, keys: list[str], table: dict[str, dict[str, float]], name: str) -> list[str]:
    out = [""] * len(keys)
    by_row: dict[str, list[int]] = {}
    for i, k in enumerate(keys):
        by_row.setdefault(k, []).append(i)
    for row in sorted(by_row):
        if row not in table:
            raise ConfigError(f"{name} has no row for {row!r}")
        cats = list(table[row])
        probs = np.array([table[row][c] for c in cats], dtype=float)
        idx = by_row[row]
        draws = rng.choice(len(cats), size=len(idx), p=probs / probs.sum())
        for i, d in zip(idx, draws):
            out[i] = cats[d]
    return out


def sample_personas(config: DemographicConfig, n: int, seed: int) -> PersonaSet:
    """Draw ``n`` personas.

    Gender, race/ethnicity and age band are drawn jointly, age uniformly within the
    band, then gender is replaced by ``Nonbinary`` with the age-dependent
    probability. Religion is drawn given race/ethnicity and political affiliation
    given (gender, race/ethnicity).
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    probs = np.array([c.p for c in config.joint_gar], dtype=float)
    cells = rng.choice(len(probs), size=n, p=probs / probs.sum())
    lo = np.array([config.joint_gar[c].age_min for c in cells])
    hi = np.array([config.joint_gar[c].age_max for c in cells])
    ages = rng.integers(lo, hi + 1)
    nb_p = np.array([config.nonbinary_probability(int(a)) for a in ages])
    nonbinary = rng.random(n) < nb_p
    genders = ["Nonbinary" if nb else config.joint_gar[c].gender for c, nb in zip(cells, nonbinary)]
    races = [config.joint_gar[c].race_ethnicity for c in cells]
    religions = _draw_conditional(rng, races, config.religion_given_race, "religion_given_race")
    keys = [f"{g}|{r}" for g, r in zip(genders, races)]
    politics = _draw_conditional(rng, keys, config.political_given_gender_race,
                                 "political_given_gender_race")
    personas = tuple(
        Persona(i, genders[i], int(ages[i]), races[i], religions[i], politics[i]) for i in range(n)
    )
    return PersonaSet(personas, VARIABLES, config.digest, seed)


def shuffle_demographics(pset: PersonaSet, seed: int) -> PersonaSet:
    """Permute every demographic column independently; ids and interests stay put."""
    rng = np.random.default_rng(seed)
    n = len(pset)
    columns = {}
    for var in pset.variables:
        col = pset.column(var)
        perm = rng.permutation(n)
        columns[FIELD[var]] = [col[j] for j in perm]
    personas = tuple(
        replace(p, **{k: v[i] for k, v in columns.items()}) for i, p in enumerate(pset.personas)
    )
    return replace(pset, personas=personas)


def project(pset: PersonaSet, variables: Iterable[str]) -> PersonaSet:
    """Keep only ``variables``; the others are removed from every persona."""
    keep = set(variables)
    if not keep:
        raise ValueError("at least one variable must be kept")
    unknown = keep - set(VARIABLES)
    if unknown:
        raise ValueError(f"unknown variables: {sorted(unknown)}")
    drop = {FIELD[v]: None for v in VARIABLES if v not in keep}
    personas = tuple(replace(p, **drop) for p in pset.personas)
    return replace(pset, personas=personas, variables=tuple(v for v in VARIABLES if v in keep))


def _format_value(variable: str, value) -> str:
    return f"age {value}" if variable == "age" else str(value)


def describe_persona(p: Persona, field_order: Sequence[str] | None = None) -> str:
    """Demographic description without the id, e.g. ``Man, age 48, Hispanic, ...``."""
    active = p.variables
    order = tuple(field_order) if field_order is not None else active
    if sorted(order) != sorted(active):
        raise ValueError(f"field_order {order} does not match active variables {active}")
    text = ", ".join(_format_value(v, p.value(v)) for v in order)
    if p.interests is not None:
        text = f"{text}; interests include: {p.interests}" if text else f"interests include: {p.interests}"
    return text


def render_persona(p: Persona, field_order: Sequence[str] | None = None) -> str:
    """Prompt line for a persona, e.g. ``28. Man, age 48, Hispanic, Protestant, Democrat``."""
    return f"{p.id}. {describe_persona(p, field_order)}"


def descriptor(variables: Sequence[str], interests: bool = False) -> str:
    """Format legend quoted in system prompts, e.g. ``ID. Gender, Age, ...``."""
    text = "ID. " + ", ".join(HEADER[v] for v in variables)
    if interests:
        text += "; interests include: Interests"
    return text


def render_interest_prompt(p: Persona, order: Sequence[str]) -> str:
    lines = [INTEREST_PROMPT_HEAD]
    lines += [f"{INTEREST_KEY[v]}: {p.value(v)}" for v in order]
    lines.append(INTEREST_PROMPT_TAIL)
    return "\n".join(lines)


def _clean_interests(reply: str) -> str | None:
    text = reply.strip().strip('"').strip()
    if not text or "\n" in text:
        return None
    return text


def attach_interests(pset: PersonaSet, backend, seed: int, max_retries: int = 3,
                     max_workers: int = 1) -> PersonaSet:
    """Generate an interests string for every persona through ``backend``.

    Demographics are listed in a per-persona random order. An empty or multi-line
    reply is retried up to ``max_retries`` times.
    """

    def one(p: Persona) -> str | None:
        rng = np.random.default_rng([seed, p.id])
        order = [p.variables[i] for i in rng.permutation(len(p.variables))]
        prompt = render_interest_prompt(p, order)
        for _ in range(max_retries + 1):
            try:
                reply = backend.complete("", prompt)
            except Exception:  # noqa: BLE001 - backend errors count as failed attempts
                continue
            text = _clean_interests(reply.text)
            if text is not None:
                return text
        return None

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            results = list(pool.map(one, pset.personas))
    else:
        results = [one(p) for p in pset.personas]

    updated = tuple(
        p if text is None else replace(p, interests=text) for p, text in zip(pset.personas, results)
    )
    failed = [p.id for p, text in zip(pset.personas, results) if text is None]
    if failed:
        raise InterestGenerationError(f"no usable interests for personas {failed}",
                                      replace(pset, personas=updated))
    return replace(pset, personas=updated)


def bundled_personas() -> PersonaSet:
    """The fixed 50-persona set shipped with the package."""
    text = resources.files("socnetgen.data").joinpath("personas50.json").read_text("utf-8")
    return PersonaSet.from_json(json.loads(text))
