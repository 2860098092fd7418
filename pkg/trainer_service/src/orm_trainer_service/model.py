"""Seed-initialized tiny causal transformer with LoRA adapters.

No pretrained checkpoints are assumed: the "base model" is a named preset of
dimensions initialized from the training seed, which is all the scoring
objective needs at desk scale. LoRA wraps the attention and MLP projections
(base weights frozen); token embeddings and the LM head stay trainable, the
usual treatment when a tokenizer introduces new special tokens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn

BASE_MODELS = {
    "tiny-causal-v1": dict(dim=64, n_layers=2, n_heads=2, max_seq_len=128),
    "tiny-causal-wide": dict(dim=128, n_layers=2, n_heads=4, max_seq_len=256),
}


@dataclass(frozen=True)
class ModelSpec:
    vocab_size: int
    dim: int
    n_layers: int
    n_heads: int
    max_seq_len: int

    @classmethod
    def for_base_model(cls, name: str, vocab_size: int) -> "ModelSpec":
        if name not in BASE_MODELS:
            raise ValueError(f"unknown base model {name!r}; expected one of {sorted(BASE_MODELS)}")
        return cls(vocab_size=vocab_size, **BASE_MODELS[name])

    def as_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "dim": self.dim,
            "n_layers": self.n_layers,
            "n_heads": self.n_heads,
            "max_seq_len": self.max_seq_len,
        }


class LoRALinear(nn.Module):
    """Frozen linear plus a trainable low-rank update B @ A scaled by alpha/r."""

    def __init__(self, base: nn.Linear, rank: int, alpha: float, dropout: float):
        super().__init__()
        self.base = base
        for parameter in self.base.parameters():
            parameter.requires_grad = False
        self.lora_a = nn.Parameter(torch.randn(rank, base.in_features) * 0.02)
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))
        self.scaling = alpha / rank
        self.dropout = nn.Dropout(dropout) if dropout > 0 else nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        update = self.dropout(x) @ self.lora_a.T @ self.lora_b.T
        return self.base(x) + update * self.scaling


class CausalSelfAttention(nn.Module):
    def __init__(self, dim: int, n_heads: int):
        super().__init__()
        assert dim % n_heads == 0
        self.n_heads = n_heads
        self.head_dim = dim // n_heads
        self.q_proj = nn.Linear(dim, dim)
        self.k_proj = nn.Linear(dim, dim)
        self.v_proj = nn.Linear(dim, dim)
        self.o_proj = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        batch, length, dim = x.shape

        def split(tensor):
            return tensor.view(batch, length, self.n_heads, self.head_dim).transpose(1, 2)

        q, k, v = split(self.q_proj(x)), split(self.k_proj(x)), split(self.v_proj(x))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        causal = torch.triu(torch.ones(length, length, dtype=torch.bool, device=x.device), 1)
        scores = scores.masked_fill(causal, float("-inf"))
        scores = scores.masked_fill(pad_mask[:, None, None, :], float("-inf"))
        attended = torch.softmax(scores, dim=-1) @ v
        merged = attended.transpose(1, 2).reshape(batch, length, dim)
        return self.o_proj(merged)


class Block(nn.Module):
    def __init__(self, dim: int, n_heads: int):
        super().__init__()
        self.ln_attn = nn.LayerNorm(dim)
        self.attn = CausalSelfAttention(dim, n_heads)
        self.ln_mlp = nn.LayerNorm(dim)
        self.fc_in = nn.Linear(dim, 4 * dim)
        self.fc_out = nn.Linear(4 * dim, dim)

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.ln_attn(x), pad_mask)
        return x + self.fc_out(torch.tanh(self.fc_in(self.ln_mlp(x))))


class TinyCausalLM(nn.Module):
    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.spec = spec
        self.token_emb = nn.Embedding(spec.vocab_size, spec.dim)
        self.pos_emb = nn.Embedding(spec.max_seq_len, spec.dim)
        self.blocks = nn.ModuleList(Block(spec.dim, spec.n_heads) for _ in range(spec.n_layers))
        self.ln_final = nn.LayerNorm(spec.dim)
        self.head = nn.Linear(spec.dim, spec.vocab_size)

    def forward(self, ids: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        length = ids.shape[1]
        positions = torch.arange(length, device=ids.device)
        x = self.token_emb(ids) + self.pos_emb(positions)
        for block in self.blocks:
            x = block(x, pad_mask)
        return self.head(self.ln_final(x))


_LORA_TARGETS = ("q_proj", "k_proj", "v_proj", "o_proj", "fc_in", "fc_out")


def apply_lora(model: TinyCausalLM, rank: int, alpha: float, dropout: float) -> TinyCausalLM:
    """Freeze the trunk and attach adapters; rank 0 means full fine-tuning."""
    if rank == 0:
        return model
    for block in model.blocks:
        block.attn.q_proj = LoRALinear(block.attn.q_proj, rank, alpha, dropout)
        block.attn.k_proj = LoRALinear(block.attn.k_proj, rank, alpha, dropout)
        block.attn.v_proj = LoRALinear(block.attn.v_proj, rank, alpha, dropout)
        block.attn.o_proj = LoRALinear(block.attn.o_proj, rank, alpha, dropout)
        block.fc_in = LoRALinear(block.fc_in, rank, alpha, dropout)
        block.fc_out = LoRALinear(block.fc_out, rank, alpha, dropout)
    model.head = LoRALinear(model.head, rank, alpha, dropout)
    # Embeddings (and layer norms) stay trainable: the step tag and outcome
    # tokens are new, so their representations must move.
    return model


def build_model(base_model: str, vocab_size: int, seed: int,
                lora_rank: int, lora_alpha: float, lora_dropout: float) -> TinyCausalLM:
    torch.manual_seed(seed)
    model = TinyCausalLM(ModelSpec.for_base_model(base_model, vocab_size))
    return apply_lora(model, lora_rank, lora_alpha, lora_dropout)
