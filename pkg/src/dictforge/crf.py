"""First-order linear-chain conditional tagger over {B, I, O}.

Emission features are label-independent observations conjoined with the
label at scoring time; transitions are label-bigram indicators (optionally
label trigrams via a composite-state expansion).  Training maximizes the
L2-regularized conditional log-likelihood with exact gradients from the
forward-backward recursions, run in log space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .corpus import word_shape
from .tagging import (
    Dictionary,
    evaluate,
    match_phrase_spans,
    tag_with_dictionary,
    validate_bio,
)
from .views import BOUNDARY

__all__ = [
    "LABELS",
    "FeatureConfig",
    "SentinelEmbeddings",
    "CrfModel",
    "CurveVariant",
    "extract_features",
    "build_model",
    "fit_weights",
    "train_crf",
    "log_likelihood_and_gradient",
    "viterbi_decode",
    "tag_sentences",
    "learning_curve",
    "standard_variants",
    "write_curve_tsv",
]

LABELS = ("B", "I", "O")
START = "^"

_LABEL_IDX = {lab: i for i, lab in enumerate(LABELS)}


@dataclass(frozen=True)
class FeatureConfig:
    """Which feature families the tagger extracts.

    The lexical families plus label bigrams form the baseline tagger;
    dict_match and embedding consume external artifacts.  prev2 widens the
    label history to two tags by expanding the chain over composite
    (previous label, label) states, which keeps inference exact.
    """

    word_identity: bool = True
    caps_lexical: bool = True
    prefix_suffix: bool = True
    window_words: bool = True
    window_caps_pattern: bool = True
    prev_tags: bool = True
    prev2: bool = False
    dict_match: bool = False
    embedding: bool = False

    @classmethod
    def from_flags(cls, flags: str) -> "FeatureConfig":
        """Parse a comma-separated flag list such as "baseline,dict,emb".

        "baseline" turns on the lexical families and label bigrams; "dict",
        "emb", and "prev2" add the corresponding extras.
        """
        base = {f: False for f in cls.__dataclass_fields__}
        for flag in flags.split(","):
            flag = flag.strip()
            if not flag:
                continue
            if flag == "baseline":
                for name in (
                    "word_identity",
                    "caps_lexical",
                    "prefix_suffix",
                    "window_words",
                    "window_caps_pattern",
                    "prev_tags",
                ):
                    base[name] = True
            elif flag == "dict":
                base["dict_match"] = True
            elif flag == "emb":
                base["embedding"] = True
            elif flag == "prev2":
                base["prev2"] = True
            else:
                raise ValueError(f"unknown feature flag {flag!r}")
        return cls(**base)


class SentinelEmbeddings:
    """Phrase embedding table plus the sentinel constants derived from it.

    x is the largest absolute component over the whole table, frozen when
    the table is loaded.  A token starting a known phrase carries that
    phrase's vector; later tokens of the phrase carry the constant 2*x in
    every dimension, and tokens outside any known phrase carry 4*x, so the
    three token roles stay linearly separable even when components are
    negative.
    """

    def __init__(self, table: Mapping[str, np.ndarray]):
        if not table:
            raise ValueError("embedding table is empty")
        self.phrases = tuple(table)
        self.matrix = np.vstack([np.asarray(table[p], dtype=float) for p in self.phrases])
        if self.matrix.ndim != 2:
            raise ValueError("embedding vectors must share one dimension")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("non-finite embedding component")
        self.k = self.matrix.shape[1]
        self.x = float(np.max(np.abs(self.matrix)))
        self._row = {p: i for i, p in enumerate(self.phrases)}
        self.phrase_set = {tuple(p.split(" ")) for p in self.phrases}

    def vector(self, phrase: str) -> np.ndarray:
        return self.matrix[self._row[phrase]]


def _named_dicts(
    dictionaries: Iterable,
) -> tuple[tuple[str, Dictionary], ...]:
    """Normalize to (name, Dictionary) pairs, naming by provenance and
    suffixing duplicates."""
    out: list[tuple[str, Dictionary]] = []
    seen: dict[str, int] = {}
    for item in dictionaries:
        if isinstance(item, Dictionary):
            name, d = item.provenance, item
        else:
            name, d = item
        seen[name] = seen.get(name, 0) + 1
        if seen[name] > 1:
            name = f"{name}#{seen[name]}"
        out.append((name, d))
    return tuple(out)


def _observations(
    tokens: Sequence[str],
    config: FeatureConfig,
    dictionaries: tuple[tuple[str, Dictionary], ...],
    embeddings: SentinelEmbeddings | None,
) -> list[dict[str, float]]:
    """Label-independent feature values, one mapping per token."""
    n = len(tokens)
    lowers = [t.lower() for t in tokens]
    shapes = [word_shape(t) for t in tokens]
    rows: list[dict[str, float]] = [{} for _ in range(n)]
    for i in range(n):
        feats = rows[i]
        if config.word_identity:
            feats[f"w={lowers[i]}"] = 1.0
        if config.caps_lexical:
            feats[f"caps={shapes[i]}"] = 1.0
        if config.prefix_suffix:
            for length in range(1, min(4, len(lowers[i])) + 1):
                feats[f"pre{length}={lowers[i][:length]}"] = 1.0
                feats[f"suf{length}={lowers[i][-length:]}"] = 1.0
        if config.window_words:
            for off in (-2, -1, 1, 2):
                j = i + off
                word = lowers[j] if 0 <= j < n else BOUNDARY
                feats[f"win{off:+d}={word}"] = 1.0
        if config.window_caps_pattern:
            pattern = "|".join(
                shapes[i + off] if 0 <= i + off < n else BOUNDARY
                for off in range(-2, 3)
            )
            feats[f"wshape={pattern}"] = 1.0
    if config.dict_match:
        for name, dictionary in dictionaries:
            tags = tag_with_dictionary(tokens, dictionary)
            for i in range(n):
                rows[i][f"dict:{name}={tags[i]}"] = 1.0
    if config.embedding:
        if embeddings is None:
            raise ValueError("embedding features enabled without a table")
        starts: dict[int, tuple[str, ...]] = {}
        inside: set[int] = set()
        for s, e, key in match_phrase_spans(tokens, embeddings.phrase_set):
            starts[s] = key
            inside.update(range(s + 1, e))
        for i in range(n):
            if i in starts:
                vec = embeddings.vector(" ".join(starts[i]))
            elif i in inside:
                vec = np.full(embeddings.k, 2.0 * embeddings.x)
            else:
                vec = np.full(embeddings.k, 4.0 * embeddings.x)
            for j, v in enumerate(vec):
                rows[i][f"emb{j}"] = float(v)
    return rows


def extract_features(
    tokens: Sequence[str],
    position: int,
    prev_label,
    label: str,
    config: FeatureConfig,
    dictionaries: Iterable = (),
    embeddings: SentinelEmbeddings | None = None,
) -> dict[str, float]:
    """All model features firing at one (position, history, label) step.

    prev_label is the previous tag (START before the first token); with
    prev2 it is the (tag two back, previous tag) pair instead.  Emission
    names carry the label conjunction explicitly so the mapping can be
    scored against a weight vector by name.
    """
    if not 0 <= position < len(tokens):
        raise IndexError(f"position {position} outside sentence")
    obs = _observations(tokens, config, _named_dicts(dictionaries), embeddings)
    out = {f"{name}|y={label}": v for name, v in obs[position].items()}
    if config.prev_tags:
        if config.prev2:
            two_back, prev = prev_label
            if position >= 1:
                out[f"t2|{two_back}>{prev}>{label}"] = 1.0
        else:
            prev = prev_label
        out[f"t|{prev}>{label}"] = 1.0
    return out


@dataclass
class CrfModel:
    """Frozen feature index plus one weight per (observation, label) pair
    and per transition indicator.  Observations unseen at training time are
    ignored at inference."""

    config: FeatureConfig
    obs_names: list[str]
    trans_names: list[str]
    weights: np.ndarray
    regularizer: float
    dictionaries: tuple[tuple[str, Dictionary], ...] = ()
    embeddings: SentinelEmbeddings | None = None
    obs_index: dict[str, int] = field(default_factory=dict, repr=False)
    trans_index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.obs_index:
            self.obs_index = {n: i for i, n in enumerate(self.obs_names)}
        if not self.trans_index:
            self.trans_index = {n: i for i, n in enumerate(self.trans_names)}
        expect = len(self.obs_names) * len(LABELS) + len(self.trans_names)
        if self.weights.shape != (expect,):
            raise ValueError(
                f"weight vector has {self.weights.shape}, expected ({expect},)"
            )
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("non-finite weight")
        if self.regularizer < 0:
            raise ValueError("regularizer must be nonnegative")

    def feature_id(self, name: str) -> int | None:
        """Weight index for a feature name from extract_features, or None
        when the feature was never indexed."""
        head, sep, label = name.rpartition("|y=")
        if sep and label in _LABEL_IDX:
            col = self.obs_index.get(head)
            if col is None:
                return None
            return col * len(LABELS) + _LABEL_IDX[label]
        tid = self.trans_index.get(name)
        if tid is None:
            return None
        return len(self.obs_names) * len(LABELS) + tid

    def score_step(self, features: Mapping[str, float]) -> float:
        """Dot product of a named feature mapping with the weights."""
        total = 0.0
        for name, value in features.items():
            fid = self.feature_id(name)
            if fid is not None:
                total += self.weights[fid] * value
        return total

    def save(self, path: str | Path) -> None:
        meta = {
            "config": {
                f: getattr(self.config, f) for f in FeatureConfig.__dataclass_fields__
            },
            "obs_names": self.obs_names,
            "trans_names": self.trans_names,
            "regularizer": self.regularizer,
            "dictionaries": [
                {
                    "name": name,
                    "provenance": d.provenance,
                    "metadata": d.metadata,
                    "scores": list(d.scores.items()),
                }
                for name, d in self.dictionaries
            ],
            "embedding_phrases": list(self.embeddings.phrases)
            if self.embeddings
            else None,
        }
        arrays = {"weights": self.weights, "meta": np.array(json.dumps(meta))}
        if self.embeddings is not None:
            arrays["emb_matrix"] = self.embeddings.matrix
        # write to the exact path given; np.savez appends .npz to bare names
        with open(path, "wb") as fh:
            np.savez_compressed(fh, **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "CrfModel":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            weights = np.array(data["weights"])
            emb = None
            if meta["embedding_phrases"] is not None:
                matrix = np.array(data["emb_matrix"])
                emb = SentinelEmbeddings(
                    dict(zip(meta["embedding_phrases"], matrix))
                )
        dicts = tuple(
            (
                entry["name"],
                Dictionary(
                    scores=dict(entry["scores"]),
                    provenance=entry["provenance"],
                    metadata=entry["metadata"],
                ),
            )
            for entry in meta["dictionaries"]
        )
        return cls(
            config=FeatureConfig(**meta["config"]),
            obs_names=list(meta["obs_names"]),
            trans_names=list(meta["trans_names"]),
            weights=weights,
            regularizer=float(meta["regularizer"]),
            dictionaries=dicts,
            embeddings=emb,
        )


def _trans_names(config: FeatureConfig) -> list[str]:
    names: list[str] = []
    if config.prev_tags:
        for p in (START,) + LABELS:
            for c in LABELS:
                names.append(f"t|{p}>{c}")
        if config.prev2:
            for a in (START,) + LABELS:
                for b in LABELS:
                    for c in LABELS:
                        names.append(f"t2|{a}>{b}>{c}")
    return names


class _Chain:
    """State space of the label chain plus weight-to-score plumbing.

    First order uses the three labels directly.  With prev2 the states are
    (previous label, label) pairs ordered by (label, previous label), so
    first-index argmax tie-breaking still prefers B over I over O in the
    decoded sequence.
    """

    def __init__(self, model: CrfModel):
        self.model = model
        cfg = model.config
        self.n_obs = len(model.obs_names)
        self.offset = self.n_obs * len(LABELS)
        if cfg.prev_tags and cfg.prev2:
            prevs = (START,) + LABELS
            self.states = sorted(
                ((p, c) for p in prevs for c in LABELS),
                key=lambda s: (_LABEL_IDX[s[1]], prevs.index(s[0])),
            )
            self.state_label = np.array([_LABEL_IDX[c] for _, c in self.states])
        else:
            self.states = list(LABELS)
            self.state_label = np.arange(len(LABELS))
        self.m = len(self.states)
        self._build_maps()

    def _tid(self, name: str) -> int:
        return self.offset + self.model.trans_index[name]

    def _build_maps(self):
        cfg = self.model.config
        m = self.m
        # start_fids[s]: weight ids firing when the sentence begins in s
        # (-1 marks an invalid start state); pair maps list every valid
        # transition with the weight ids it fires.
        self.start_valid = np.zeros(m, dtype=bool)
        start_fids: list[list[int]] = [[] for _ in range(m)]
        rows, cols, fids = [], [], []
        if cfg.prev_tags and cfg.prev2:
            for si, (p, c) in enumerate(self.states):
                if p == START:
                    self.start_valid[si] = True
                    start_fids[si].append(self._tid(f"t|{START}>{c}"))
            for si, (p, c) in enumerate(self.states):
                for sj, (p2, c2) in enumerate(self.states):
                    if p2 != c:
                        continue
                    rows.append(si)
                    cols.append(sj)
                    fids.append(self._tid(f"t|{c}>{c2}"))
                    rows.append(si)
                    cols.append(sj)
                    fids.append(self._tid(f"t2|{p}>{c}>{c2}"))
        else:
            self.start_valid[:] = True
            if cfg.prev_tags:
                for si, c in enumerate(self.states):
                    start_fids[si].append(self._tid(f"t|{START}>{c}"))
                for si, c in enumerate(self.states):
                    for sj, c2 in enumerate(self.states):
                        rows.append(si)
                        cols.append(sj)
                        fids.append(self._tid(f"t|{c}>{c2}"))
        self.pair_rows = np.array(rows, dtype=int)
        self.pair_cols = np.array(cols, dtype=int)
        self.pair_fids = np.array(fids, dtype=int)
        self.start_fids = start_fids
        if cfg.prev_tags and cfg.prev2:
            valid = np.zeros((m, m), dtype=bool)
            for si, (_, c) in enumerate(self.states):
                for sj, (p2, _) in enumerate(self.states):
                    valid[si, sj] = p2 == c
            self.valid = valid
        else:
            self.valid = np.ones((m, m), dtype=bool)

    def scores(self, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(start vector, transition matrix) in log space; invalid moves
        are -inf."""
        start = np.where(self.start_valid, 0.0, -np.inf)
        for si, fids in enumerate(self.start_fids):
            for fid in fids:
                start[si] += weights[fid]
        trans = np.where(self.valid, 0.0, -np.inf)
        if self.pair_fids.size:
            np.add.at(trans, (self.pair_rows, self.pair_cols), weights[self.pair_fids])
        return start, trans

    def state_path(self, labels: Sequence[str]) -> list[int]:
        """State index sequence realizing a label sequence."""
        if self.model.config.prev_tags and self.model.config.prev2:
            path = []
            prev = START
            for lab in labels:
                path.append(self.states.index((prev, lab)))
                prev = lab
            return path
        return [_LABEL_IDX[lab] for lab in labels]


@dataclass
class _Compiled:
    """One sentence reduced to arrays for the objective loop."""

    obs_ids: list[np.ndarray]
    obs_vals: list[np.ndarray]
    gold: np.ndarray | None
    gold_states: np.ndarray | None
    gold_fids: np.ndarray | None


def _compile(
    model: CrfModel,
    chain: _Chain,
    sentences: Sequence[tuple[Sequence[str], Sequence[str] | None]],
    with_gold: bool,
) -> list[_Compiled]:
    compiled = []
    for tokens, tags in sentences:
        obs = _observations(
            tokens, model.config, model.dictionaries, model.embeddings
        )
        ids, vals = [], []
        for feats in obs:
            pairs = [
                (model.obs_index[name], v)
                for name, v in feats.items()
                if name in model.obs_index
            ]
            ids.append(np.array([p[0] for p in pairs], dtype=int))
            vals.append(np.array([p[1] for p in pairs], dtype=float))
        gold = gold_states = gold_fids = None
        if with_gold:
            validate_bio(tags)
            if len(tags) != len(tokens):
                raise ValueError("token/tag length mismatch")
            gold = np.array([_LABEL_IDX[t] for t in tags], dtype=int)
            path = chain.state_path(tags)
            gold_states = np.array(path, dtype=int)
            fids = list(chain.start_fids[path[0]])
            for a, b in zip(path, path[1:]):
                mask = (chain.pair_rows == a) & (chain.pair_cols == b)
                fids.extend(chain.pair_fids[mask])
            gold_fids = np.array(fids, dtype=int)
        compiled.append(_Compiled(ids, vals, gold, gold_states, gold_fids))
    return compiled


def _emissions(compiled: _Compiled, w_obs: np.ndarray) -> np.ndarray:
    n = len(compiled.obs_ids)
    E = np.zeros((n, len(LABELS)))
    for i, (ids, vals) in enumerate(zip(compiled.obs_ids, compiled.obs_vals)):
        if ids.size:
            E[i] = vals @ w_obs[ids]
    return E


def _forward(start: np.ndarray, trans: np.ndarray, estate: np.ndarray):
    n, m = estate.shape
    alpha = np.empty((n, m))
    alpha[0] = start + estate[0]
    for t in range(1, n):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + trans, axis=0) + estate[t]
    return alpha, float(logsumexp(alpha[-1]))


def _backward(trans: np.ndarray, estate: np.ndarray) -> np.ndarray:
    n, m = estate.shape
    beta = np.empty((n, m))
    beta[-1] = 0.0
    for t in range(n - 2, -1, -1):
        beta[t] = logsumexp(trans + (estate[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def _neg_objective(
    weights: np.ndarray,
    model: CrfModel,
    chain: _Chain,
    compiled: Sequence[_Compiled],
) -> tuple[float, np.ndarray]:
    """Negative (log-likelihood - lambda * ||w||^2) and its gradient."""
    n_lab = len(LABELS)
    w_obs = weights[: chain.offset].reshape(chain.n_obs, n_lab)
    start, trans = chain.scores(weights)
    grad = np.zeros_like(weights)
    g_obs = grad[: chain.offset].reshape(chain.n_obs, n_lab)
    pair_expect = np.zeros((chain.m, chain.m))
    start_expect = np.zeros(chain.m)
    ll = 0.0
    for sent in compiled:
        E = _emissions(sent, w_obs)
        estate = E[:, chain.state_label]
        alpha, log_z = _forward(start, trans, estate)
        beta = _backward(trans, estate)
        node = np.exp(alpha + beta - log_z)
        n = estate.shape[0]
        start_expect += node[0]
        for t in range(1, n):
            pair_expect += np.exp(
                alpha[t - 1][:, None]
                + trans
                + (estate[t] + beta[t])[None, :]
                - log_z
            )
        # expected minus observed emission counts
        for i in range(n):
            ids, vals = sent.obs_ids[i], sent.obs_vals[i]
            if not ids.size:
                continue
            lab_marg = np.bincount(
                chain.state_label, weights=node[i], minlength=n_lab
            )
            g_obs[ids] += np.outer(vals, lab_marg)
            g_obs[ids, sent.gold[i]] -= vals
        gold_score = float(E[np.arange(n), sent.gold].sum())
        gold_score += float(weights[sent.gold_fids].sum()) if sent.gold_fids.size else 0.0
        ll += gold_score - log_z
        np.subtract.at(grad, sent.gold_fids, 1.0)
    if chain.pair_fids.size:
        np.add.at(
            grad,
            chain.pair_fids,
            pair_expect[chain.pair_rows, chain.pair_cols],
        )
    for si, fids in enumerate(chain.start_fids):
        for fid in fids:
            grad[fid] += start_expect[si]
    lam = model.regularizer
    value = -(ll - lam * float(weights @ weights))
    grad += 2.0 * lam * weights
    if not np.isfinite(value):
        raise ValueError(
            f"objective diverged: value={value}, |w|={np.linalg.norm(weights):.3g}"
        )
    return value, grad


def build_model(
    sentences: Sequence[tuple[Sequence[str], Sequence[str]]],
    config: FeatureConfig = FeatureConfig(),
    *,
    dictionaries: Iterable = (),
    embeddings: SentinelEmbeddings | None = None,
    regularizer: float = 1.0,
) -> CrfModel:
    """Zero-weight model with the feature index frozen from the data."""
    named = _named_dicts(dictionaries)
    if config.embedding and embeddings is None:
        raise ValueError("embedding features enabled without a table")
    obs_index: dict[str, int] = {}
    for tokens, _ in sentences:
        for feats in _observations(tokens, config, named, embeddings):
            for name in feats:
                if name not in obs_index:
                    obs_index[name] = len(obs_index)
    obs_names = list(obs_index)
    trans_names = _trans_names(config)
    weights = np.zeros(len(obs_names) * len(LABELS) + len(trans_names))
    return CrfModel(
        config=config,
        obs_names=obs_names,
        trans_names=trans_names,
        weights=weights,
        regularizer=regularizer,
        dictionaries=named,
        embeddings=embeddings,
    )


def fit_weights(
    model: CrfModel,
    sentences: Sequence[tuple[Sequence[str], Sequence[str]]],
    init: np.ndarray | None = None,
    max_iters: int = 500,
    gtol: float = 1e-5,
) -> CrfModel:
    """Quasi-Newton fit of the weights; returns a new model."""
    if not sentences:
        raise ValueError("empty training set")
    chain = _Chain(model)
    compiled = _compile(model, chain, sentences, with_gold=True)
    x0 = np.zeros_like(model.weights) if init is None else np.asarray(init, dtype=float)
    if x0.shape != model.weights.shape:
        raise ValueError("init shape mismatch")
    result = minimize(
        _neg_objective,
        x0,
        args=(model, chain, compiled),
        jac=True,
        method="L-BFGS-B",
        options={"gtol": gtol, "maxiter": max_iters},
    )
    if not np.all(np.isfinite(result.x)) or not np.isfinite(result.fun):
        raise RuntimeError(
            f"training diverged: objective={result.fun}, message={result.message}"
        )
    return replace(model, weights=result.x)


def train_crf(
    sentences: Sequence[tuple[Sequence[str], Sequence[str]]],
    config: FeatureConfig = FeatureConfig(),
    *,
    dictionaries: Iterable = (),
    embeddings: SentinelEmbeddings | None = None,
    regularizer: float = 1.0,
    max_iters: int = 500,
) -> CrfModel:
    """Build the feature index from the data and fit the weights."""
    model = build_model(
        sentences,
        config,
        dictionaries=dictionaries,
        embeddings=embeddings,
        regularizer=regularizer,
    )
    return fit_weights(model, sentences, max_iters=max_iters)


def log_likelihood_and_gradient(
    model: CrfModel,
    sentences: Sequence[tuple[Sequence[str], Sequence[str]]],
) -> tuple[float, np.ndarray]:
    """Regularized conditional log-likelihood of the gold tags and its
    exact gradient with respect to the weights."""
    chain = _Chain(model)
    compiled = _compile(model, chain, sentences, with_gold=True)
    value, grad = _neg_objective(model.weights, model, chain, compiled)
    return -value, -grad


def viterbi_decode(model: CrfModel, tokens: Sequence[str]) -> list[str]:
    """Exact argmax tag sequence; ties prefer B over I over O."""
    if not tokens:
        return []
    chain = _Chain(model)
    compiled = _compile(model, chain, [(tokens, None)], with_gold=False)[0]
    w_obs = model.weights[: chain.offset].reshape(chain.n_obs, len(LABELS))
    estate = _emissions(compiled, w_obs)[:, chain.state_label]
    start, trans = chain.scores(model.weights)
    n, m = estate.shape
    delta = start + estate[0]
    back = np.zeros((n, m), dtype=int)
    for t in range(1, n):
        cand = delta[:, None] + trans
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(m)] + estate[t]
    state = int(np.argmax(delta))
    path = [state]
    for t in range(n - 1, 0, -1):
        state = int(back[t, state])
        path.append(state)
    path.reverse()
    return [LABELS[chain.state_label[s]] for s in path]


def tag_sentences(
    model: CrfModel, sentences: Iterable[Sequence[str]]
) -> list[list[str]]:
    return [viterbi_decode(model, tokens) for tokens in sentences]


@dataclass(frozen=True)
class CurveVariant:
    """One feature configuration to trace across training sizes."""

    name: str
    config: FeatureConfig
    dictionaries: tuple = ()
    embeddings: SentinelEmbeddings | None = None


def standard_variants(
    config: FeatureConfig = FeatureConfig(),
    dictionaries: Iterable = (),
    word_embeddings: SentinelEmbeddings | None = None,
    phrase_embeddings: SentinelEmbeddings | None = None,
) -> list[CurveVariant]:
    """Baseline plus one variant per dictionary and per embedding table.

    Dictionary variants are named dict-<name>; the embedding variants are
    cca-word (single-word vectors) and cca-phrase (candidate phrase
    vectors)."""
    out = [CurveVariant("baseline", config)]
    for name, d in _named_dicts(dictionaries):
        out.append(
            CurveVariant(
                f"dict-{name}",
                replace(config, dict_match=True),
                ((name, d),),
            )
        )
    if word_embeddings is not None:
        out.append(
            CurveVariant(
                "cca-word", replace(config, embedding=True), (), word_embeddings
            )
        )
    if phrase_embeddings is not None:
        out.append(
            CurveVariant(
                "cca-phrase", replace(config, embedding=True), (), phrase_embeddings
            )
        )
    return out


def learning_curve(
    train: Sequence[tuple[Sequence[str], Sequence[str]]],
    test: Sequence[tuple[Sequence[str], Sequence[str]]],
    sizes: Sequence[int],
    variants: Sequence[CurveVariant],
    *,
    regularizer: float = 0.1,
    max_iters: int = 500,
) -> list[dict]:
    """Train each variant at each training-set prefix size and score it on
    the held-out sentences; rows are plot-ready."""
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    if sizes and sizes[-1] > len(train):
        raise ValueError(f"size {sizes[-1]} exceeds training set of {len(train)}")
    rows = []
    gold = [tags for _, tags in test]
    for size in sizes:
        subset = train[:size]
        for variant in variants:
            model = train_crf(
                subset,
                variant.config,
                dictionaries=variant.dictionaries,
                embeddings=variant.embeddings,
                regularizer=regularizer,
                max_iters=max_iters,
            )
            predicted = tag_sentences(model, (tokens for tokens, _ in test))
            report = evaluate(predicted, gold)
            rows.append(
                {
                    "size": size,
                    "variant": variant.name,
                    **report.as_dict(),
                }
            )
    return rows


def write_curve_tsv(rows: Sequence[dict], fh) -> None:
    fh.write("size\tvariant\ttp\tfp\tfn\tprecision\trecall\tf1\n")
    for row in rows:
        fh.write(
            f"{row['size']}\t{row['variant']}\t{row['tp']}\t{row['fp']}\t"
            f"{row['fn']}\t{row['precision']:.6f}\t{row['recall']:.6f}\t{row['f1']:.6f}\n"
        )
