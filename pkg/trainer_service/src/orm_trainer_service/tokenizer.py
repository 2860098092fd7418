"""Whitespace word-level vocabulary persisted beside the model weights."""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Iterable

PAD, UNK = "<pad>", "<unk>"
STEP_TAG = "<extra_0>"
PLUS, MINUS = "+", "-"
SPECIALS = (PAD, UNK, STEP_TAG, PLUS, MINUS)


class WordVocab:
    def __init__(self, words: list[str]):
        assert tuple(words[: len(SPECIALS)]) == SPECIALS, "specials must lead the vocabulary"
        self.words = list(words)
        self.index = {word: i for i, word in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    @property
    def pad_id(self) -> int:
        return self.index[PAD]

    @property
    def unk_id(self) -> int:
        return self.index[UNK]

    @property
    def tag_id(self) -> int:
        return self.index[STEP_TAG]

    @property
    def plus_id(self) -> int:
        return self.index[PLUS]

    @property
    def minus_id(self) -> int:
        return self.index[MINUS]

    @classmethod
    def build(cls, texts: Iterable[str], max_vocab: int = 8192) -> "WordVocab":
        counts: Counter = Counter()
        for text in texts:
            counts.update(text.split())
        for special in SPECIALS:
            counts.pop(special, None)
        # Frequency first, then alphabetical: deterministic for a fixed corpus.
        kept = sorted(counts, key=lambda w: (-counts[w], w))[: max_vocab - len(SPECIALS)]
        return cls(list(SPECIALS) + kept)

    def encode(self, text: str, max_len: int) -> list[int]:
        ids = [self.index.get(word, self.unk_id) for word in text.split()]
        # Keep the tail: the step tag sits at the end of every model input.
        return ids[-max_len:]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.words, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "WordVocab":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))
