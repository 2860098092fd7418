"""Step-tag outcome training: predict '+'/'-' at the tag position."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

import torch
import torch.nn as nn

from .data import TrainingRecord, file_digest, load_training_file
from .errors import ResourceExhausted
from .model import build_model
from .tokenizer import WordVocab

WEIGHTS_NAME = "weights.pt"
VOCAB_NAME = "vocab.json"
CONFIG_NAME = "config.json"
LOG_NAME = "training_log.json"


@dataclass(frozen=True)
class TrainerConfig:
    train_file: str
    output_dir: str
    base_model: str = "tiny-causal-v1"
    epochs: int = 3
    batch_size: int = 64
    learning_rate: float = 5e-4
    # Adapter settings are desk-scale defaults, exposed rather than prescribed.
    lora_rank: int = 8
    lora_alpha: float = 16.0
    lora_dropout: float = 0.0
    seed: int = 0
    max_vocab: int = 8192

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lora_rank < 0:
            raise ValueError(f"lora_rank must be >= 0, got {self.lora_rank}")

    def as_dict(self) -> dict:
        return {
            "train_file": self.train_file,
            "output_dir": self.output_dir,
            "base_model": self.base_model,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "lora_rank": self.lora_rank,
            "lora_alpha": self.lora_alpha,
            "lora_dropout": self.lora_dropout,
            "seed": self.seed,
            "max_vocab": self.max_vocab,
        }


def _batch_tensors(records: list[TrainingRecord], vocab: WordVocab, max_len: int):
    encoded = [vocab.encode(r.model_input, max_len) for r in records]
    width = max(len(ids) for ids in encoded)
    ids = torch.full((len(encoded), width), vocab.pad_id, dtype=torch.long)
    pad_mask = torch.ones(len(encoded), width, dtype=torch.bool)
    tag_positions = []
    for row, sequence in enumerate(encoded):
        ids[row, : len(sequence)] = torch.tensor(sequence, dtype=torch.long)
        pad_mask[row, : len(sequence)] = False
        tag_positions.append(len(sequence) - 1)
    targets = torch.tensor(
        [vocab.plus_id if r.outcome == "+" else vocab.minus_id for r in records]
    )
    return ids, pad_mask, torch.tensor(tag_positions), targets


def train(config: TrainerConfig) -> Path:
    """Fine-tune on the training file; returns the self-contained model directory."""
    records = load_training_file(config.train_file)
    vocab = WordVocab.build((r.model_input for r in records), config.max_vocab)
    model = build_model(
        config.base_model,
        len(vocab),
        config.seed,
        config.lora_rank,
        config.lora_alpha,
        config.lora_dropout,
    )
    max_len = model.spec.max_seq_len
    trainable = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.AdamW(trainable, lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    epoch_losses: list[float] = []
    try:
        model.train()
        for epoch in range(config.epochs):
            order = list(range(len(records)))
            random.Random(config.seed * 10_007 + epoch).shuffle(order)
            total = 0.0
            steps = 0
            for start in range(0, len(order), config.batch_size):
                batch = [records[i] for i in order[start : start + config.batch_size]]
                ids, pad_mask, tag_positions, targets = _batch_tensors(batch, vocab, max_len)
                logits = model(ids, pad_mask)
                tag_logits = logits[torch.arange(len(batch)), tag_positions]
                loss = loss_fn(tag_logits, targets)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                total += float(loss.item())
                steps += 1
            epoch_losses.append(total / steps)
    except RuntimeError as exc:
        if "out of memory" in str(exc).lower():
            raise ResourceExhausted(str(exc)) from exc
        raise

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), out_dir / WEIGHTS_NAME)
    vocab.save(out_dir / VOCAB_NAME)
    (out_dir / CONFIG_NAME).write_text(
        json.dumps(
            {
                "trainer": config.as_dict(),
                "model": model.spec.as_dict(),
                "training_file_digest": file_digest(config.train_file),
                "records": len(records),
            },
            indent=1,
            sort_keys=True,
        ),
        encoding="utf-8",
    )
    (out_dir / LOG_NAME).write_text(
        json.dumps({"loss_per_epoch": epoch_losses}, indent=1), encoding="utf-8"
    )
    return out_dir
