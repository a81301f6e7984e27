"""Slot taggers over atomic-concept trees.

Three factorizations share one BLSTM encoder recipe:

    JS    one softmax head over every IOB slot tag
    AC    an IOB head plus one independent head per concept dimension
    ACD*  a dimension-1 stage whose predictions feed a second stage that
          labels dimension 2 (ACD1 gathers predicted spans into bracketed
          concept tokens, ACD1U into one unified symbol, ACD2 concatenates
          a learned concept embedding to frozen word embeddings)

Transfer runs in four steps: initialize, train on the source task, extend
the output layers for the target ontology (`adjust_nn_arch`), fine-tune on
the target data.  Presets ending in ``_T`` skip the source steps.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import neural
from .corpus import (
    Corpus,
    TokenVocabulary,
    iob_to_spans,
    parse_tag,
    preprocess,
    subset_corpus,
)
from .evaluation import EvalReport, evaluate
from .neural import (
    EmbeddingTable,
    LstmCellParams,
    ModelParams,
    ShapeSpec,
    SoftmaxHead,
    TrainingConfig,
)
from .ontology import (
    NULL_ATOM,
    Ontology,
    branch_to_slot,
    ontology_diff,
    ontology_hash,
    read_ontology,
    write_ontology,
)

JS = "JS"
AC = "AC"
ACD1 = "ACD1"
ACD1U = "ACD1U"
ACD2 = "ACD2"
KINDS = (JS, AC, ACD1, ACD1U, ACD2)
ACD_KINDS = (ACD1, ACD1U, ACD2)

IOB_LABELS = ("O", "B", "I")
UNIFIED_CONCEPT_TOKEN = "<CCC>"

# preset name -> (model kind, uses the source task)
PRESETS: dict[str, tuple[str, bool]] = {
    "JS_T": (JS, False),
    "AC_T": (AC, False),
    "JS_TS": (JS, True),
    "AC_TS": (AC, True),
    "ACD_TS_1": (ACD1, True),
    "ACD_TS_1U": (ACD1U, True),
    "ACD_TS_2": (ACD2, True),
}

MODEL_FORMAT = "atomslot-model v1"

_SALT_SOURCE = 11
_SALT_TARGET = 12
_SALT_STAGE2 = 13
_SALT_INIT = 101
_SALT_SHUFFLE = 201
_SALT_ADJUST = 301


class ModelError(Exception):
    """Base error for model assembly and training."""


class EmptyCorpus(ModelError):
    """A corpus that must carry utterances is empty."""


class LabelNotInOntology(ModelError):
    """A corpus tag names a slot the ontology does not register."""


# ---------------------------------------------------------------------------
# head layouts

def js_head_labels(ontology: Ontology) -> tuple[str, ...]:
    """``O`` first, then B/I tags per slot in sorted slot order."""
    labels = ["O"]
    for slot in sorted(ontology.branches):
        labels.append(f"B-{slot}")
        labels.append(f"I-{slot}")
    return tuple(labels)


def dim_head_labels(ontology: Ontology, dim: int) -> tuple[str, ...]:
    """``null`` first, then the dimension's atoms sorted.  ``dim`` is 0-based."""
    atoms = ontology.dimensions[dim].atoms
    return (NULL_ATOM,) + tuple(sorted(atoms - {NULL_ATOM}))


def _stage1_head_labels(
    kind: str, ontology: Ontology, dims_used: int
) -> tuple[tuple[str, ...], ...]:
    if kind == JS:
        return (js_head_labels(ontology),)
    return (IOB_LABELS,) + tuple(dim_head_labels(ontology, d) for d in range(dims_used))


def _index(labels) -> dict[str, int]:
    return {label: i for i, label in enumerate(labels)}


@dataclass
class TaggerModel:
    """A trained or trainable tagger; ACD kinds carry a second stage."""

    kind: str
    ontology: Ontology
    vocab: TokenVocabulary
    stage1: ModelParams
    dims_used: int = 0
    stage2: ModelParams | None = None
    stage2_vocab: TokenVocabulary | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")

    def copy(self) -> "TaggerModel":
        return TaggerModel(
            kind=self.kind,
            ontology=self.ontology,
            vocab=self.vocab,
            stage1=self.stage1.copy(),
            dims_used=self.dims_used,
            stage2=self.stage2.copy() if self.stage2 is not None else None,
            stage2_vocab=self.stage2_vocab,
        )


@dataclass(frozen=True)
class PredictionLattice:
    """Per-position class probabilities, one block per softmax head."""

    head_labels: tuple[tuple[str, ...], ...]
    probs: tuple[np.ndarray, ...]


# ---------------------------------------------------------------------------
# decoding

def _stage1_probs(model: TaggerModel, tokens) -> list[np.ndarray]:
    ids = model.vocab.encode(tokens)
    features = neural.blstm_forward(model.stage1, ids)
    return [neural.head_forward(head, features) for head in model.stage1.heads]


def decode_js(model: TaggerModel, tokens) -> tuple[str, ...]:
    """Per-position argmax over the joint tag head (ties to lowest index)."""
    if len(tokens) == 0:
        return ()
    probs = _stage1_probs(model, tokens)[0]
    labels = model.stage1.heads[0].labels
    return tuple(labels[i] for i in probs.argmax(axis=1))


def decode_ac(model: TaggerModel, tokens):
    """Componentwise argmax over the IOB head and every dimension head.

    Maximizing each factor independently maximizes the product of the head
    probabilities, so this is the top-best hypothesis.  Unregistered
    branches keep their canonical name and simply score as wrong.  Returns
    the tag sequence plus per-position (IOB, branch) detail.
    """
    n = len(tokens)
    if n == 0:
        return (), []
    head_probs = _stage1_probs(model, tokens)
    heads = model.stage1.heads
    iob_choice = head_probs[0].argmax(axis=1)
    dim_choices = [p.argmax(axis=1) for p in head_probs[1:]]
    tags = []
    detail = []
    for t in range(n):
        iob = heads[0].labels[iob_choice[t]]
        branch = tuple(
            heads[d + 1].labels[dim_choices[d][t]] for d in range(len(dim_choices))
        )
        detail.append((iob, branch))
        if iob == "O":
            tags.append("O")
        else:
            tags.append(f"{iob}-{branch_to_slot(model.ontology, branch)}")
    return tuple(tags), detail


def _stage1_decode(model: TaggerModel, tokens) -> tuple[list[str], list[str]]:
    """Predicted IOB prefixes and dimension-1 atoms, one per position."""
    head_probs = _stage1_probs(model, tokens)
    iob_labels = model.stage1.heads[0].labels
    dim1_labels = model.stage1.heads[1].labels
    iob = [iob_labels[i] for i in head_probs[0].argmax(axis=1)]
    dim1 = [dim1_labels[i] for i in head_probs[1].argmax(axis=1)]
    return iob, dim1


def bracket_token(atom: str) -> str:
    return f"[{atom}]"


def gather_sequence(tokens, iob, dim1, unified: bool):
    """Collapse each predicted span of one non-null dimension-1 concept to a
    single concept token.

    Returns the gathered token list plus, per gathered position, the list
    of original positions it covers.
    """
    pseudo = [
        "O" if iob[t] == "O" or dim1[t] == NULL_ATOM else f"{iob[t]}-{dim1[t]}"
        for t in range(len(tokens))
    ]
    spans = {s.start: s for s in iob_to_spans(tokens, pseudo)}
    gathered: list[str] = []
    groups: list[list[int]] = []
    pos = 0
    while pos < len(tokens):
        span = spans.get(pos)
        if span is not None:
            gathered.append(
                UNIFIED_CONCEPT_TOKEN if unified else bracket_token(span.slot)
            )
            groups.append(list(range(span.start, span.end)))
            pos = span.end
        else:
            gathered.append(tokens[pos])
            groups.append([pos])
            pos += 1
    return gathered, groups


def _stage2_dim2(model: TaggerModel, tokens, iob, dim1):
    """Dimension-2 prediction per original position, plus projected probs."""
    labels2 = model.stage2.heads[0].labels
    n = len(tokens)
    if model.kind in (ACD1, ACD1U):
        gathered, groups = gather_sequence(tokens, iob, dim1, model.kind == ACD1U)
        ids = model.stage2_vocab.encode(gathered)
        features = neural.blstm_forward(model.stage2, ids)
        probs_g = neural.head_forward(model.stage2.heads[0], features)
        choice_g = probs_g.argmax(axis=1)
        dim2 = [NULL_ATOM] * n
        probs = np.empty((n, len(labels2)))
        for gi, group in enumerate(groups):
            for p in group:
                dim2[p] = labels2[choice_g[gi]]
                probs[p] = probs_g[gi]
    else:
        concept_index = _index(model.stage1.heads[1].labels)
        concept_ids = np.fromiter(
            (concept_index[a] for a in dim1), dtype=np.int64, count=n
        )
        word_ids = model.vocab.encode(tokens)
        features = neural.blstm_forward(model.stage2, (word_ids, concept_ids))
        probs = neural.head_forward(model.stage2.heads[0], features)
        dim2 = [labels2[i] for i in probs.argmax(axis=1)]
    return dim2, probs


def decode_acd(model: TaggerModel, tokens) -> tuple[str, ...]:
    """Two-stage decoding: stage 1 fixes IOB and dimension 1, stage 2 fills
    dimension 2 conditioned on those predictions."""
    if model.kind not in ACD_KINDS:
        raise ModelError(f"decode_acd needs an ACD model, got {model.kind}")
    if model.stage2 is None:
        raise ModelError("stage-2 parameters are missing; run adjust_nn_arch first")
    if model.ontology.depth != 2:
        raise ModelError("ACD decoding is defined for two-level ontologies")
    if len(tokens) == 0:
        return ()
    iob, dim1 = _stage1_decode(model, tokens)
    dim2, _ = _stage2_dim2(model, tokens, iob, dim1)
    tags = []
    for t in range(len(tokens)):
        if iob[t] == "O":
            tags.append("O")
        else:
            slot = branch_to_slot(model.ontology, (dim1[t], dim2[t]))
            tags.append(f"{iob[t]}-{slot}")
    return tuple(tags)


def decode(model: TaggerModel, tokens) -> tuple[str, ...]:
    if model.kind == JS:
        return decode_js(model, tokens)
    if model.kind == AC:
        return decode_ac(model, tokens)[0]
    return decode_acd(model, tokens)


def predict_lattice(model: TaggerModel, tokens) -> PredictionLattice:
    """Stage-1 head probabilities; ACD kinds append the projected stage-2
    dimension-2 probabilities."""
    head_probs = _stage1_probs(model, tokens)
    labels = [head.labels for head in model.stage1.heads]
    if model.kind in ACD_KINDS and len(tokens) > 0:
        iob_labels = model.stage1.heads[0].labels
        iob = [iob_labels[i] for i in head_probs[0].argmax(axis=1)]
        dim1_labels = model.stage1.heads[1].labels
        dim1 = [dim1_labels[i] for i in head_probs[1].argmax(axis=1)]
        _, probs2 = _stage2_dim2(model, tokens, iob, dim1)
        head_probs.append(probs2)
        labels.append(model.stage2.heads[0].labels)
    return PredictionLattice(tuple(tuple(l) for l in labels), tuple(head_probs))


def predict_corpus(model: TaggerModel, corpus: Corpus) -> list[tuple[str, ...]]:
    return [decode(model, u.tokens) for u in corpus]


def evaluate_model(model: TaggerModel, corpus: Corpus) -> EvalReport:
    """Preprocess with the model's vocabulary, decode, and score."""
    prepared, _ = preprocess(corpus, model.vocab)
    return evaluate(corpus, predict_corpus(model, prepared))


# ---------------------------------------------------------------------------
# gold-label encoding

def _encode_gold_js(head_map, utterance):
    ids = np.empty(len(utterance), dtype=np.int64)
    for t, tag in enumerate(utterance.tags):
        got = head_map.get(tag)
        if got is None:
            raise LabelNotInOntology(f"tag {tag!r} is not derivable from the ontology")
        ids[t] = got
    return (ids,)


def _encode_gold_ac(ontology, maps, utterance, dims_used):
    n = len(utterance)
    iob_ids = np.empty(n, dtype=np.int64)
    dim_ids = [np.empty(n, dtype=np.int64) for _ in range(dims_used)]
    for t, tag in enumerate(utterance.tags):
        prefix, slot = parse_tag(tag)
        iob_ids[t] = maps[0][prefix]
        if prefix == "O":
            atoms = (NULL_ATOM,) * ontology.depth
        else:
            atoms = ontology.branches.get(slot)
            if atoms is None:
                raise LabelNotInOntology(f"slot {slot!r} is not in the ontology")
        for d in range(dims_used):
            got = maps[d + 1].get(atoms[d])
            if got is None:
                raise LabelNotInOntology(
                    f"atom {atoms[d]!r} missing from the dimension-{d + 1} head"
                )
            dim_ids[d][t] = got
    return (iob_ids, *dim_ids)


def _gold_stage1(ontology, utterance):
    """Gold IOB prefixes and dimension-1 atoms (for teacher forcing)."""
    iob = []
    dim1 = []
    for tag in utterance.tags:
        prefix, slot = parse_tag(tag)
        iob.append(prefix)
        if prefix == "O":
            dim1.append(NULL_ATOM)
        else:
            branch = ontology.branches.get(slot)
            if branch is None:
                raise LabelNotInOntology(f"slot {slot!r} is not in the ontology")
            dim1.append(branch[0])
    return iob, dim1


def _gold_dim2(ontology, utterance):
    atoms = []
    for tag in utterance.tags:
        prefix, slot = parse_tag(tag)
        if prefix == "O":
            atoms.append(NULL_ATOM)
            continue
        branch = ontology.branches.get(slot)
        if branch is None:
            raise LabelNotInOntology(f"slot {slot!r} is not in the ontology")
        atoms.append(branch[1])
    return atoms


# ---------------------------------------------------------------------------
# training

@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    valid_f1: float


@dataclass
class CandidateLog:
    learning_rate: float
    initial_loss: float
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    best_f1: float | None = None


@dataclass
class TrainLog:
    candidates: list[CandidateLog]
    chosen: int

    @property
    def best(self) -> CandidateLog:
        return self.candidates[self.chosen]


def format_train_log(log: TrainLog) -> str:
    lines = ["candidate\tlr\tepoch\ttrain_loss\tvalid_f1"]
    for ci, cand in enumerate(log.candidates):
        lines.append(f"{ci}\t{cand.learning_rate:g}\t0\t{cand.initial_loss:.6f}\t-")
        for stats in cand.epochs:
            lines.append(
                f"{ci}\t{cand.learning_rate:g}\t{stats.epoch}"
                f"\t{stats.train_loss:.6f}\t{stats.valid_f1:.2f}"
            )
    lines.append(f"# chosen candidate: {log.chosen}")
    return "\n".join(lines)


def _require_nonempty(corpus: Corpus, what: str) -> None:
    if len(corpus) == 0:
        raise EmptyCorpus(f"the {what} corpus is empty")


def _item_length(ids) -> int:
    return len(ids[0]) if isinstance(ids, tuple) else len(ids)


def _mean_loss(params: ModelParams, encoded) -> float:
    if not encoded:
        return 0.0
    total = neural.sequence_loss(params, encoded)
    return total / len(encoded)


def _fit(params_factory, encoded, valid_f1, config: TrainingConfig, rng_salt: int):
    """Grid search over learning rates with per-epoch validation snapshots.

    Every candidate draws from its own RNG stream; shuffling depends only
    on (seed, epoch) so candidates see the same data order.  The best
    validation F1 wins, ties going to the earlier grid entry.
    """
    candidates: list[CandidateLog] = []
    chosen = 0
    chosen_key = float("-inf")
    chosen_params = None
    for ci, lr in enumerate(config.grid()):
        rng = neural.rng_stream(config.seed, _SALT_INIT, rng_salt, ci)
        params = params_factory(rng)
        log = CandidateLog(lr, _mean_loss(params, encoded))
        best_params = params.copy()
        for epoch in range(1, config.epochs + 1):
            order = neural.rng_stream(config.seed, _SALT_SHUFFLE, epoch).permutation(
                len(encoded)
            )
            total = 0.0
            for i in order:
                ids, gold = encoded[i]
                masks = neural.make_dropout_masks(
                    rng, config.dropout, _item_length(ids),
                    params.input_dim, params.hidden,
                )
                loss, grads = neural.loss_and_gradients(
                    params, [(ids, gold)], [masks] if masks is not None else None
                )
                neural.sgd_step(params, grads, lr)
                total += loss
            f1 = valid_f1(params)
            log.epochs.append(EpochStats(epoch, total / len(encoded), f1))
            if log.best_f1 is None or f1 > log.best_f1:
                log.best_f1 = f1
                log.best_epoch = epoch
                best_params = params.copy()
        candidates.append(log)
        key = log.best_f1 if log.best_f1 is not None else float("-inf")
        if chosen_params is None or key > chosen_key:
            chosen, chosen_key, chosen_params = ci, key, best_params
    return chosen_params, TrainLog(candidates, chosen)


def train(
    kind: str,
    ontology: Ontology,
    train_corpus: Corpus,
    valid_corpus: Corpus,
    config: TrainingConfig,
    *,
    dims_used: int | None = None,
    initial: TaggerModel | None = None,
    rng_salt: int = _SALT_TARGET,
) -> tuple[TaggerModel, TrainLog]:
    """Train a JS or AC tagger (ACD variants are assembled by ``adapt``).

    Corpora must be preprocessed.  When ``initial`` is given its parameters
    seed every grid candidate (fine-tuning); otherwise parameters start
    uniform in +-init_range and the vocabulary is read off the training
    corpus.
    """
    if kind not in (JS, AC):
        raise ModelError(
            f"train() handles {JS} and {AC}; {kind!r} models are built by adapt()"
        )
    _require_nonempty(train_corpus, "training")
    _require_nonempty(valid_corpus, "validation")
    if initial is not None:
        if initial.kind != kind:
            raise ModelError(f"initial model is {initial.kind}, expected {kind}")
        vocab = initial.vocab
        dims_used = initial.dims_used
        head_labels = tuple(head.labels for head in initial.stage1.heads)
        template = initial.stage1
    else:
        if dims_used is None:
            dims_used = ontology.depth if kind == AC else 0
        vocab = TokenVocabulary.from_corpus(train_corpus)
        head_labels = _stage1_head_labels(kind, ontology, dims_used)
        template = None
    maps = [_index(labels) for labels in head_labels]
    encoded = []
    for u in train_corpus:
        ids = vocab.encode(u.tokens)
        if kind == JS:
            gold = _encode_gold_js(maps[0], u)
        else:
            gold = _encode_gold_ac(ontology, maps, u, dims_used)
        encoded.append((ids, gold))
    shape = ShapeSpec(
        tables=((len(vocab), config.emb_dim),),
        hidden=config.hidden,
        heads=head_labels,
    )

    def factory(rng):
        if template is not None:
            return template.copy()
        return neural.init_params(shape, rng, config.init_range)

    def valid_f1(params):
        probe = TaggerModel(kind, ontology, vocab, params, dims_used)
        return evaluate(valid_corpus, predict_corpus(probe, valid_corpus)).f1

    best_params, log = _fit(factory, encoded, valid_f1, config, rng_salt)
    return TaggerModel(kind, ontology, vocab, best_params, dims_used), log


def train_acd(
    ontology: Ontology,
    model: TaggerModel,
    train_corpus: Corpus,
    valid_corpus: Corpus,
    config: TrainingConfig,
    teacher_forcing: bool = False,
) -> tuple[TaggerModel, TrainLog]:
    """Train the stage-2 labeler of an ACD model; stage 1 stays frozen.

    Stage-2 inputs come from stage-1 predictions on the training corpus
    (computed once, since stage 1 does not move).  With ``teacher_forcing``
    the gold IOB and dimension-1 labels shape the inputs instead.  The gold
    dimension-2 label of a gathered span is read at the span's first
    original position.
    """
    if model.kind not in ACD_KINDS:
        raise ModelError(f"train_acd needs an ACD model, got {model.kind}")
    if model.stage2 is None:
        raise ModelError("stage-2 parameters are missing; run adjust_nn_arch first")
    if ontology.depth != 2:
        raise ModelError("ACD training is defined for two-level ontologies")
    _require_nonempty(train_corpus, "training")
    _require_nonempty(valid_corpus, "validation")
    dim2_map = _index(model.stage2.heads[0].labels)
    concept_map = _index(model.stage1.heads[1].labels)
    encoded = []
    for u in train_corpus:
        if teacher_forcing:
            iob, dim1 = _gold_stage1(ontology, u)
        else:
            iob, dim1 = _stage1_decode(model, u.tokens)
        gold_atoms = _gold_dim2(ontology, u)
        try:
            gold_ids = [dim2_map[a] for a in gold_atoms]
        except KeyError as exc:
            raise LabelNotInOntology(
                f"atom {exc.args[0]!r} missing from the dimension-2 head"
            ) from None
        if model.kind in (ACD1, ACD1U):
            gathered, groups = gather_sequence(
                u.tokens, iob, dim1, model.kind == ACD1U
            )
            ids = (model.stage2_vocab.encode(gathered),)
            gold = np.fromiter(
                (gold_ids[group[0]] for group in groups),
                dtype=np.int64,
                count=len(groups),
            )
        else:
            concept_ids = np.fromiter(
                (concept_map[a] for a in dim1), dtype=np.int64, count=len(u)
            )
            ids = (model.vocab.encode(u.tokens), concept_ids)
            gold = np.asarray(gold_ids, dtype=np.int64)
        encoded.append((ids, (gold,)))
    stage2_template = model.stage2

    def factory(rng):
        return stage2_template.copy()

    def valid_f1(stage2_params):
        probe = TaggerModel(
            model.kind, ontology, model.vocab, model.stage1,
            model.dims_used, stage2_params, model.stage2_vocab,
        )
        return evaluate(valid_corpus, predict_corpus(probe, valid_corpus)).f1

    best_stage2, log = _fit(factory, encoded, valid_f1, config, _SALT_STAGE2)
    trained = TaggerModel(
        model.kind, ontology, model.vocab, model.stage1,
        model.dims_used, best_stage2, model.stage2_vocab,
    )
    return trained, log


# ---------------------------------------------------------------------------
# architecture adjustment and the four-step adaptation

def _extend_head(head: SoftmaxHead, new_labels, rng, init_range) -> SoftmaxHead:
    fresh = [label for label in new_labels if label not in head.labels]
    if not fresh:
        return head
    w_new = rng.uniform(-init_range, init_range, size=(len(fresh), head.w.shape[1]))
    b_new = rng.uniform(-init_range, init_range, size=len(fresh))
    return SoftmaxHead(
        np.vstack([head.w, w_new]),
        np.concatenate([head.b, b_new]),
        head.labels + tuple(fresh),
    )


def _new_head(labels, hidden, rng, init_range) -> SoftmaxHead:
    return SoftmaxHead(
        rng.uniform(-init_range, init_range, size=(len(labels), 2 * hidden)),
        rng.uniform(-init_range, init_range, size=len(labels)),
        tuple(labels),
    )


def _build_stage2(model, target_ontology, rng, init_range, concept_emb_dim):
    """Fresh stage-2 BLSTM.  ACD1/ACD1U reuse the stage-1 word embeddings
    (frozen) and add trainable rows for the concept tokens; ACD2 freezes
    the whole word table and adds a learned concept-embedding channel."""
    stage1 = model.stage1
    H = stage1.hidden
    word = stage1.tables[0]
    dim2_labels = dim_head_labels(target_ontology, 1)
    stage2_vocab = None
    if model.kind in (ACD1, ACD1U):
        if model.kind == ACD1U:
            extra = [UNIFIED_CONCEPT_TOKEN]
        else:
            concepts = sorted(target_ontology.dimensions[0].atoms - {NULL_ATOM})
            extra = [bracket_token(c) for c in concepts]
        stage2_vocab = model.vocab.extended(extra)
        n_new = len(stage2_vocab) - len(model.vocab)
        new_rows = rng.uniform(-init_range, init_range, size=(n_new, word.cols))
        tables = (
            EmbeddingTable(
                np.vstack([word.weights.copy(), new_rows]),
                frozen_rows=len(model.vocab),
            ),
        )
    else:
        concept_labels = model.stage1.heads[1].labels
        concept_table = EmbeddingTable(
            rng.uniform(
                -init_range, init_range, size=(len(concept_labels), concept_emb_dim)
            )
        )
        tables = (
            EmbeddingTable(word.weights.copy(), frozen_rows=word.rows),
            concept_table,
        )
    D = sum(t.cols for t in tables)
    fwd = LstmCellParams(
        rng.uniform(-init_range, init_range, size=(4 * H, D + H)),
        rng.uniform(-init_range, init_range, size=4 * H),
    )
    bwd = LstmCellParams(
        rng.uniform(-init_range, init_range, size=(4 * H, D + H)),
        rng.uniform(-init_range, init_range, size=4 * H),
    )
    head = _new_head(dim2_labels, H, rng, init_range)
    return ModelParams(tables, fwd, bwd, (head,), H), stage2_vocab


def adjust_nn_arch(
    model: TaggerModel,
    source_ontology: Ontology,
    target_ontology: Ontology,
    seed: int,
    init_range: float = 0.2,
    concept_emb_dim: int = 20,
) -> TaggerModel:
    """Extend the output layers for the target ontology.

    New classes get fresh uniform rows; every pre-existing parameter is
    preserved bit-exactly, so old-class logits cannot move.  ACD kinds
    additionally receive a fresh stage-2 BLSTM.
    """
    diff = ontology_diff(source_ontology, target_ontology)
    rng = neural.rng_stream(seed, _SALT_ADJUST)
    out = model.copy()
    out.ontology = target_ontology
    heads = list(out.stage1.heads)
    if model.kind == JS:
        new_slots = sorted(target_ontology.reverse[b] for b in diff.new_branches)
        new_labels = [f"{p}-{s}" for s in new_slots for p in ("B", "I")]
        heads[0] = _extend_head(heads[0], new_labels, rng, init_range)
        out.stage1.heads = tuple(heads)
        return out
    if model.kind == AC:
        for d in range(model.dims_used):
            heads[d + 1] = _extend_head(
                heads[d + 1], sorted(diff.new_atoms[d]), rng, init_range
            )
        for d in range(model.dims_used, target_ontology.depth):
            heads.append(
                _new_head(
                    dim_head_labels(target_ontology, d),
                    out.stage1.hidden,
                    rng,
                    init_range,
                )
            )
        out.stage1.heads = tuple(heads)
        out.dims_used = target_ontology.depth
        return out
    # ACD kinds: extend the dimension-1 head, then build stage 2
    if target_ontology.depth != 2:
        raise ModelError("ACD adjustment is defined for two-level target ontologies")
    heads[1] = _extend_head(heads[1], sorted(diff.new_atoms[0]), rng, init_range)
    out.stage1.heads = tuple(heads)
    if out.stage2 is None or not diff.is_empty:
        out.stage2, out.stage2_vocab = _build_stage2(
            out, target_ontology, rng, init_range, concept_emb_dim
        )
    return out


@dataclass
class AdaptResult:
    preset: str
    model: TaggerModel
    logs: dict[str, TrainLog]
    # the source-task model (trained here or passed in); reusable across
    # presets whose source step is identical
    source_model: TaggerModel | None = None


def adapt(
    preset: str,
    source_ontology: Ontology | None,
    target_ontology: Ontology,
    source_train: Corpus | None,
    source_valid: Corpus | None,
    target_train: Corpus,
    target_valid: Corpus,
    config: TrainingConfig,
    source_model: TaggerModel | None = None,
) -> AdaptResult:
    """Run the four-step adaptation for one preset.

    Steps: initialize, train on the source task, adjust the architecture
    to the target ontology, fine-tune on the target data.  ``*_T`` presets
    skip the source steps.  An empty target training set stops after the
    adjustment, returning the source-trained model.  ``source_model``
    optionally replaces step 2 with an already-trained source model (it
    must match what that step would have produced).
    """
    if preset not in PRESETS:
        raise ModelError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    kind, uses_source = PRESETS[preset]
    logs: dict[str, TrainLog] = {}
    if not uses_source:
        model, tlog = train(
            kind, target_ontology, target_train, target_valid, config,
            rng_salt=_SALT_TARGET,
        )
        logs["target"] = tlog
        return AdaptResult(preset, model, logs)
    if source_ontology is None:
        raise ModelError(f"preset {preset} needs a source ontology")
    stage1_kind = AC if kind in ACD_KINDS else kind
    if source_model is None:
        if source_train is None or source_valid is None:
            raise ModelError(f"preset {preset} needs source corpora")
        source_model, slog = train(
            stage1_kind, source_ontology, source_train, source_valid, config,
            dims_used=1 if kind in ACD_KINDS else None,
            rng_salt=_SALT_SOURCE,
        )
        logs["source"] = slog
    elif source_model.kind != stage1_kind:
        raise ModelError(
            f"source model is {source_model.kind}, preset {preset} needs {stage1_kind}"
        )
    if kind in ACD_KINDS:
        base = TaggerModel(
            kind, source_ontology, source_model.vocab,
            source_model.stage1.copy(), dims_used=1,
        )
        adjusted = adjust_nn_arch(
            base, source_ontology, target_ontology, config.seed,
            init_range=config.init_range, concept_emb_dim=config.concept_emb_dim,
        )
        if len(target_train) == 0:
            return AdaptResult(preset, adjusted, logs, source_model)
        model, tlog = train_acd(
            target_ontology, adjusted, target_train, target_valid, config,
            teacher_forcing=config.teacher_forcing,
        )
        logs["target"] = tlog
        return AdaptResult(preset, model, logs, source_model)
    adjusted = adjust_nn_arch(
        source_model, source_ontology, target_ontology, config.seed,
        init_range=config.init_range,
    )
    if len(target_train) == 0:
        return AdaptResult(preset, adjusted, logs, source_model)
    model, tlog = train(
        kind, target_ontology, target_train, target_valid, config,
        initial=adjusted, rng_salt=_SALT_TARGET,
    )
    logs["target"] = tlog
    return AdaptResult(preset, model, logs, source_model)


def run_experiment(
    preset: str,
    source_ontology: Ontology | None,
    target_ontology: Ontology,
    source_train: Corpus | None,
    source_valid: Corpus | None,
    target_train: Corpus,
    target_valid: Corpus,
    config: TrainingConfig,
    subset: int | None = None,
    source_model: TaggerModel | None = None,
) -> AdaptResult:
    """Preprocess raw corpora, optionally subsample the target training
    set, and run ``adapt``.

    Source presets build the vocabulary from the source training corpus;
    target-only presets build it from the (subsampled) target training
    corpus.
    """
    if subset is not None:
        target_train = subset_corpus(target_train, subset, config.seed)
    uses_source = PRESETS[preset][1] if preset in PRESETS else False
    if uses_source and source_model is None:
        if source_train is None or source_valid is None:
            raise ModelError(f"preset {preset} needs source corpora")
        source_train, vocab = preprocess(source_train)
        source_valid, _ = preprocess(source_valid, vocab)
    elif uses_source:
        vocab = source_model.vocab
    else:
        target_train, vocab = preprocess(target_train)
    if uses_source:
        target_train, _ = preprocess(target_train, vocab)
    target_valid, _ = preprocess(target_valid, vocab)
    return adapt(
        preset, source_ontology, target_ontology, source_train, source_valid,
        target_train, target_valid, config, source_model,
    )


# ---------------------------------------------------------------------------
# model bundles on disk

def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()


def save_model(model: TaggerModel, directory, config: TrainingConfig | None = None) -> None:
    """Write a self-contained bundle: manifest, ontology, vocabularies,
    and one checkpoint per stage."""
    os.makedirs(directory, exist_ok=True)
    paths = {
        "ontology": os.path.join(directory, "ontology.txt"),
        "vocab": os.path.join(directory, "vocab.txt"),
        "stage1": os.path.join(directory, "stage1.txt"),
    }
    write_ontology(model.ontology, paths["ontology"])
    model.vocab.save(paths["vocab"])
    neural.save_params(model.stage1, paths["stage1"])
    if model.stage2 is not None:
        paths["stage2"] = os.path.join(directory, "stage2.txt")
        neural.save_params(model.stage2, paths["stage2"])
    if model.stage2_vocab is not None:
        paths["stage2_vocab"] = os.path.join(directory, "stage2_vocab.txt")
        model.stage2_vocab.save(paths["stage2_vocab"])
    manifest = {
        "format": MODEL_FORMAT,
        "kind": model.kind,
        "dims_used": model.dims_used,
        "ontology_sha256": ontology_hash(model.ontology),
        "vocab_sha256": _sha256_file(paths["vocab"]),
        "files": {name: os.path.basename(p) for name, p in paths.items()},
        "config": dataclasses.asdict(config) if config is not None else None,
    }
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_model(directory) -> TaggerModel:
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != MODEL_FORMAT:
        raise ModelError(f"unsupported model format {manifest.get('format')!r}")
    files = manifest["files"]
    ontology = read_ontology(os.path.join(directory, files["ontology"]))
    vocab = TokenVocabulary.load(os.path.join(directory, files["vocab"]))
    stage1 = neural.load_params(os.path.join(directory, files["stage1"]))
    stage2 = None
    stage2_vocab = None
    if "stage2" in files:
        stage2 = neural.load_params(os.path.join(directory, files["stage2"]))
    if "stage2_vocab" in files:
        stage2_vocab = TokenVocabulary.load(os.path.join(directory, files["stage2_vocab"]))
    return TaggerModel(
        manifest["kind"], ontology, vocab, stage1,
        manifest["dims_used"], stage2, stage2_vocab,
    )
