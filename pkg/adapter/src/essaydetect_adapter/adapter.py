"""Causal-LM scoring of essay corpora into ScoredTokens lines.

Sentence segmentation mirrors the toolkit's rule and is applied to the raw
text before subword tokenization: a sentence ends at ``.``, ``!`` or ``?``
unless the mark sits between two alphanumeric characters. Each sentence is
tokenized by the model's own tokenizer; sentence break indices are the
cumulative token offsets, so the toolkit's sentence-level perplexities line
up even though the token inventory is subword, not word.

Every token gets a conditional natural-log probability. The first token of
a context window is conditioned on the tokenizer's BOS (or EOS) token.
``context_mode="sentence"`` resets context at every sentence;
``"document"`` carries context across sentences. Sequences longer than the
model window are scored in non-overlapping chunks, each restarted on the
conditioning token, and the affected essay ids are listed in the output
metadata. Output lines keep corpus order.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import torch
import torch.nn.functional as F

from . import essayio


@dataclass(frozen=True)
class AdapterConfig:
    model: str  # Hugging Face identifier or local path
    device: str = "cpu"
    batch_size: int = 8
    context_mode: str = "sentence"  # or "document"
    max_window: int | None = None  # defaults to the model's position limit

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.context_mode not in ("sentence", "document"):
            raise ValueError(f"context_mode must be sentence or document, got {self.context_mode}")


def load_model(config):
    from transformers import AutoModelForCausalLM, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(config.model)
        model = AutoModelForCausalLM.from_pretrained(config.model)
    except Exception as exc:
        raise RuntimeError(f"failed to load model \"{config.model}\": {exc}") from exc
    model.eval()
    model.to(config.device)
    if tokenizer.bos_token_id is not None:
        start_id = tokenizer.bos_token_id
    elif tokenizer.eos_token_id is not None:
        start_id = tokenizer.eos_token_id
    else:
        raise RuntimeError(
            f"model \"{config.model}\" has neither a BOS nor an EOS token to condition the first token on"
        )
    return tokenizer, model, start_id


def _window(config, model):
    if config.max_window is not None:
        return config.max_window
    for attr in ("n_positions", "max_position_embeddings"):
        limit = getattr(model.config, attr, None)
        if limit:
            return int(limit)
    return 1024


def _segments(essay_ids, context_mode, window):
    """Per essay: token strings, sentence breaks, and the id sequences to score.

    Returns (tokens, breaks, sequences, chunked) where sequences is a list of
    id lists, each at most window - 1 long (leaving room for the start token).
    """
    tokens, breaks, sequences = [], [], []
    pieces = []  # id runs that share context
    for sent_ids, sent_toks in essay_ids:
        breaks.append(len(tokens))
        tokens.extend(sent_toks)
        if context_mode == "sentence":
            pieces.append(list(sent_ids))
        else:
            if pieces:
                pieces[0].extend(sent_ids)
            else:
                pieces.append(list(sent_ids))
    chunked = False
    limit = window - 1
    for run in pieces:
        if len(run) > limit:
            chunked = True
            for i in range(0, len(run), limit):
                sequences.append(run[i : i + limit])
        else:
            sequences.append(run)
    return tokens, breaks, sequences, chunked


@torch.no_grad()
def _score_batch(model, start_id, device, batch):
    """Log-probabilities for each id sequence; right padding + attention mask."""
    lengths = [len(seq) for seq in batch]
    width = max(lengths) + 1  # plus the conditioning token
    input_ids = torch.full((len(batch), width), start_id, dtype=torch.long)
    mask = torch.zeros((len(batch), width), dtype=torch.long)
    for r, seq in enumerate(batch):
        input_ids[r, 1 : 1 + len(seq)] = torch.tensor(seq, dtype=torch.long)
        mask[r, : 1 + len(seq)] = 1
    logits = model(input_ids=input_ids.to(device), attention_mask=mask.to(device)).logits
    logprobs = F.log_softmax(logits.float(), dim=-1)
    out = []
    for r, seq in enumerate(batch):
        targets = input_ids[r, 1 : 1 + len(seq)].to(device)
        row = logprobs[r, : len(seq)].gather(1, targets[:, None]).squeeze(1)
        out.append([min(float(v), 0.0) for v in row.cpu()])
    return out


def score_essays(essays, config, tokenizer=None, model=None, start_id=None):
    """Score Essay records; returns (records, metadata).

    Each record is a ScoredTokens-shaped dict (essay_id, tokens, logprobs,
    sentence_breaks), in input order.
    """
    if model is None:
        tokenizer, model, start_id = load_model(config)
    window = _window(config, model)

    per_essay = []
    sequences = []
    chunked_ids = []
    for essay in essays:
        sentences = essayio.split_sentences(essay.text)
        if not sentences:
            raise ValueError(f"essay \"{essay.id}\": no sentences after segmentation")
        sent_items = []
        for s in sentences:
            ids = tokenizer(s, add_special_tokens=False)["input_ids"]
            if ids:
                sent_items.append((ids, tokenizer.convert_ids_to_tokens(ids)))
        if not sent_items:
            raise ValueError(f"essay \"{essay.id}\": tokenizer produced no tokens")
        tokens, breaks, seqs, chunked = _segments(sent_items, config.context_mode, window)
        if chunked:
            chunked_ids.append(essay.id)
        first = len(sequences)
        sequences.extend(seqs)
        per_essay.append((essay.id, tokens, breaks, first, len(seqs)))

    scored = []
    for i in range(0, len(sequences), config.batch_size):
        scored.extend(_score_batch(model, start_id, config.device, sequences[i : i + config.batch_size]))

    records = []
    total_tokens = 0
    for essay_id, tokens, breaks, first, count in per_essay:
        logprobs = [lp for part in scored[first : first + count] for lp in part]
        assert len(logprobs) == len(tokens), f"essay {essay_id}: token count drifted"
        total_tokens += len(tokens)
        records.append(
            {
                "essay_id": essay_id,
                "tokens": tokens,
                "logprobs": logprobs,
                "sentence_breaks": breaks,
            }
        )
    metadata = {
        "version": "0.1.0",
        "params": {
            "model": config.model,
            "device": config.device,
            "batch_size": config.batch_size,
            "context_mode": config.context_mode,
            "window": window,
            "log_base": "e",
        },
        "chunked_essays": chunked_ids,
        "total_tokens": total_tokens,
    }
    return records, metadata


def score_corpus(corpus_path, out_path, config):
    """Essay line format in, ScoredTokens line format out. Returns metadata."""
    essays = essayio.read_corpus(corpus_path)
    records, metadata = score_essays(essays, config)
    with Path(out_path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"_meta": metadata}, sort_keys=True, ensure_ascii=False) + "\n")
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
    return metadata
