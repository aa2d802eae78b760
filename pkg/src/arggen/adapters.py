"""Model adapters: a uniform contract over causal and seq2seq generators.

Two desk-scale adapters ship with the package. EchoAdapter is a stateless
oracle that answers with the facts segment of its prompt; TinyCharLM is a small
trainable character-level language model (fixed-window MLP over character
embeddings, Adam, greedy decoding) that exercises the full fine-tune/generate
path deterministically. Full pretrained models plug in behind the same
contract.
"""

from __future__ import annotations

import json
import string
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .pair_builder import ARGUMENTS_TOKEN, FACTS_TOKEN

PAD_ID = 0
EOS_ID = 1


class ModelAdapter(Protocol):
    """What the generation harness needs from a model."""

    family: str  # "causal" | "seq2seq"
    model_id: str

    def count_tokens(self, text: str) -> int: ...

    def fine_tune(self, examples, config, val_examples=None) -> "ModelAdapter": ...

    def generate(self, prompt_or_source: str, max_new_tokens: int = 256, seed: int = 0) -> str: ...


class EchoAdapter:
    """Returns the facts segment of the prompt verbatim; fine-tuning is a no-op."""

    def __init__(self, family: str = "causal"):
        self.family = family
        self.model_id = "echo"
        self.history: list[dict] = []

    def count_tokens(self, text: str) -> int:
        return len(text.split())

    def fine_tune(self, examples, config, val_examples=None) -> "EchoAdapter":
        return self

    def generate(self, prompt_or_source: str, max_new_tokens: int = 256, seed: int = 0) -> str:
        prefix = f"{FACTS_TOKEN} "
        suffix = f" {ARGUMENTS_TOKEN}"
        text = prompt_or_source
        if text.startswith(prefix):
            text = text[len(prefix) :]
        if text.endswith(suffix):
            text = text[: -len(suffix)]
        return text.strip()

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "meta.json").write_text(
            json.dumps({"adapter": "echo", "family": self.family}), encoding="utf-8"
        )

    @classmethod
    def load(cls, directory) -> "EchoAdapter":
        meta = json.loads((Path(directory) / "meta.json").read_text(encoding="utf-8"))
        return cls(family=meta["family"])


class TinyCharLM:
    """Character-level next-character model with a fixed context window.

    Architecture: character embeddings -> concatenated window -> tanh hidden
    layer -> softmax over the character vocabulary. Trained with Adam on
    next-character cross-entropy; seq2seq examples compute loss only on target
    positions. Generation is greedy, hence deterministic for fixed parameters.
    """

    def __init__(
        self,
        family: str = "causal",
        seed: int = 0,
        context: int = 48,
        embed_dim: int = 12,
        hidden_dim: int = 64,
        model_id: str | None = None,
    ):
        if family not in ("causal", "seq2seq"):
            raise ValueError(f"bad family: {family!r}")
        self.family = family
        self.model_id = model_id or f"tiny-char-{family}"
        self.seed = seed
        self.context = context
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.history: list[dict] = []

        self._chars = sorted(set(string.printable))
        self._char_to_id = {c: i + 2 for i, c in enumerate(self._chars)}
        self._space_id = self._char_to_id[" "]
        self.vocab_size = len(self._chars) + 2

        rng = np.random.default_rng(seed)
        V, e, C, H = self.vocab_size, embed_dim, context, hidden_dim
        self.params = {
            "emb": rng.normal(0.0, 0.1, size=(V, e)),
            "W1": rng.normal(0.0, 0.1, size=(C * e, H)),
            "b1": np.zeros(H),
            "W2": rng.normal(0.0, 0.1, size=(H, V)),
            "b2": np.zeros(V),
        }

    # -- text <-> ids -----------------------------------------------------------

    def _ids(self, text: str) -> list[int]:
        return [self._char_to_id.get(ch, self._space_id) for ch in text]

    def _decode(self, ids: Sequence[int]) -> str:
        out = []
        for i in ids:
            if i >= 2:
                out.append(self._chars[i - 2])
        return "".join(out)

    def count_tokens(self, text: str) -> int:
        return len(text.split())

    # -- model ------------------------------------------------------------------

    def _forward(self, contexts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        p = self.params
        flat = p["emb"][contexts].reshape(contexts.shape[0], -1)
        hidden = np.tanh(flat @ p["W1"] + p["b1"])
        logits = hidden @ p["W2"] + p["b2"]
        return flat, hidden, logits

    @staticmethod
    def _log_softmax(logits: np.ndarray) -> np.ndarray:
        shift = logits - logits.max(axis=1, keepdims=True)
        return shift - np.log(np.exp(shift).sum(axis=1, keepdims=True))

    def _loss(self, contexts: np.ndarray, targets: np.ndarray) -> float:
        _, _, logits = self._forward(contexts)
        logp = self._log_softmax(logits)
        return float(-logp[np.arange(len(targets)), targets].mean())

    def _example_positions(self, example) -> tuple[list[int], int]:
        """Token id sequence plus the position where the loss region starts."""
        if self.family == "causal":
            seq = self._ids(example) + [EOS_ID]
            return seq, 0
        source, target = example
        prefix = self._ids(source + " ")
        return prefix + self._ids(target) + [EOS_ID], len(prefix)

    def _build_dataset(self, examples) -> tuple[np.ndarray, np.ndarray]:
        contexts, targets = [], []
        C = self.context
        for example in examples:
            seq, loss_start = self._example_positions(example)
            padded = [PAD_ID] * C + seq
            for pos in range(loss_start, len(seq)):
                contexts.append(padded[pos : pos + C])
                targets.append(seq[pos])
        return np.asarray(contexts, dtype=np.int64), np.asarray(targets, dtype=np.int64)

    def fine_tune(self, examples, config, val_examples=None) -> "TinyCharLM":
        """Train a copy of this model; the untrained original is left intact.

        Per-epoch train/validation cross-entropy is appended to the returned
        adapter's ``history``.
        """
        if not examples:
            raise ValueError("no training examples")
        trained = self._clone()
        X, y = trained._build_dataset(examples)
        val = trained._build_dataset(val_examples) if val_examples else None

        rng = np.random.default_rng(config.seed)
        state = {k: {"m": np.zeros_like(v), "v": np.zeros_like(v)} for k, v in trained.params.items()}
        step = 0
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        lr = config.learning_rate

        for epoch in range(1, config.epochs + 1):
            order = rng.permutation(len(y))
            batch_losses = []
            for start in range(0, len(order), config.batch_size):
                batch = order[start : start + config.batch_size]
                loss, grads = trained._loss_and_grads(X[batch], y[batch])
                batch_losses.append(loss)
                step += 1
                for name, grad in grads.items():
                    s = state[name]
                    s["m"] = beta1 * s["m"] + (1 - beta1) * grad
                    s["v"] = beta2 * s["v"] + (1 - beta2) * grad * grad
                    m_hat = s["m"] / (1 - beta1**step)
                    v_hat = s["v"] / (1 - beta2**step)
                    trained.params[name] -= lr * m_hat / (np.sqrt(v_hat) + eps)
            entry = {"epoch": epoch, "train_loss": float(np.mean(batch_losses))}
            if val is not None:
                entry["val_loss"] = trained._loss(*val)
            trained.history.append(entry)
        return trained

    def _loss_and_grads(self, contexts: np.ndarray, targets: np.ndarray):
        p = self.params
        B = contexts.shape[0]
        flat, hidden, logits = self._forward(contexts)
        logp = self._log_softmax(logits)
        loss = float(-logp[np.arange(B), targets].mean())

        d_logits = np.exp(logp)
        d_logits[np.arange(B), targets] -= 1.0
        d_logits /= B

        grads = {
            "W2": hidden.T @ d_logits,
            "b2": d_logits.sum(axis=0),
        }
        d_hidden = d_logits @ p["W2"].T
        d_pre = d_hidden * (1.0 - hidden * hidden)
        grads["W1"] = flat.T @ d_pre
        grads["b1"] = d_pre.sum(axis=0)
        d_flat = (d_pre @ p["W1"].T).reshape(B, self.context, self.embed_dim)
        d_emb = np.zeros_like(p["emb"])
        np.add.at(d_emb, contexts, d_flat)
        grads["emb"] = d_emb
        return loss, grads

    def generate(self, prompt_or_source: str, max_new_tokens: int = 256, seed: int = 0) -> str:
        prompt = prompt_or_source if self.family == "causal" else prompt_or_source + " "
        ids = self._ids(prompt)
        generated: list[int] = []
        for _ in range(max_new_tokens):
            window = ([PAD_ID] * self.context + ids + generated)[-self.context :]
            _, _, logits = self._forward(np.asarray([window], dtype=np.int64))
            next_id = int(np.argmax(logits[0]))  # greedy
            if next_id == EOS_ID:
                break
            generated.append(next_id)
        return self._decode(generated)

    # -- persistence --------------------------------------------------------------

    def _clone(self) -> "TinyCharLM":
        clone = TinyCharLM(
            family=self.family,
            seed=self.seed,
            context=self.context,
            embed_dim=self.embed_dim,
            hidden_dim=self.hidden_dim,
            model_id=self.model_id,
        )
        clone.params = {k: v.copy() for k, v in self.params.items()}
        return clone

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        meta = {
            "adapter": "tiny",
            "family": self.family,
            "model_id": self.model_id,
            "seed": self.seed,
            "context": self.context,
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
        }
        (directory / "meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
        np.savez(directory / "params.npz", **self.params)

    @classmethod
    def load(cls, directory) -> "TinyCharLM":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
        model = cls(
            family=meta["family"],
            seed=meta["seed"],
            context=meta["context"],
            embed_dim=meta["embed_dim"],
            hidden_dim=meta["hidden_dim"],
            model_id=meta["model_id"],
        )
        with np.load(directory / "params.npz") as data:
            model.params = {k: data[k].copy() for k in data.files}
        return model


ADAPTERS = {"echo": EchoAdapter, "tiny": TinyCharLM}


def make_adapter(name: str, family: str, seed: int = 0):
    if name == "echo":
        return EchoAdapter(family=family)
    if name == "tiny":
        return TinyCharLM(family=family, seed=seed)
    raise ValueError(f"unknown adapter {name!r}; available: {sorted(ADAPTERS)}")


def load_adapter(directory):
    meta = json.loads((Path(directory) / "meta.json").read_text(encoding="utf-8"))
    if meta["adapter"] == "echo":
        return EchoAdapter.load(directory)
    if meta["adapter"] == "tiny":
        return TinyCharLM.load(directory)
    raise ValueError(f"unknown adapter kind {meta['adapter']!r}")
