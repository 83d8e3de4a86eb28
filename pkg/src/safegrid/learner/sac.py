"""Dual-critic Safety-SAC over an enumerated discrete action set.

Expectations over actions are exact sums over the categorical policy.
The encoder feeds twin reward critics (min backup), a sigmoid safety
critic and the policy; the actor step does not update the encoder.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .batch import Batch
from .config import LearnerConfig
from .nets import MLP, clip_grads, grad_norm, log_softmax, sigmoid

CHECKPOINT_VERSION = 1


class NumericalError(RuntimeError):
    pass


class LearnerUsageError(RuntimeError):
    pass


def _check_finite(name: str, *values) -> None:
    for v in values:
        if not np.all(np.isfinite(v)):
            raise NumericalError(f"non-finite {name}; update aborted")


def actor_objective(logits: np.ndarray, q_min: np.ndarray, q_c: np.ndarray | None,
                    alpha: float, beta: float, eps_c: float):
    """Actor loss terms and the gradient with respect to the logits.

    ``L_pi_r = mean_i sum_a pi (alpha log pi - Q_r)``,
    ``L_pi_c = mean_i sum_a pi max(0, Q_c - eps_c)``, ``L_pi = L_pi_r + beta L_pi_c``.
    """
    n = logits.shape[0]
    logp = log_softmax(logits)
    pi = np.exp(logp)
    f = alpha * logp - q_min
    l_r = float(np.sum(pi * f)) / n
    l_c = 0.0
    if beta != 0.0 and q_c is not None:
        margin = np.maximum(0.0, q_c - eps_c)
        l_c = float(np.sum(pi * margin)) / n
        f = f + beta * margin
    # d/dl_k sum_a pi_a f_a (with f depending on log pi) = pi_k (f_k - <f>)
    mean_f = np.sum(pi * f, axis=1, keepdims=True)
    dlogits = pi * (f - mean_f) / n
    return l_r + beta * l_c, l_r, l_c, dlogits


class SafetySAC:
    def __init__(self, obs_dim: int, n_actions: int, config: LearnerConfig = LearnerConfig(),
                 seed: int = 0):
        self.config = config
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.seed = seed
        c = config
        rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(6)]
        self.encoder = MLP([obs_dim, c.hidden_dim, c.latent_dim], out_act="tanh", rng=rngs[0])
        self.q1 = MLP([c.latent_dim, c.hidden_dim, n_actions], rng=rngs[1])
        self.q2 = MLP([c.latent_dim, c.hidden_dim, n_actions], rng=rngs[2])
        self.actor = MLP([c.latent_dim, c.hidden_dim, n_actions], rng=rngs[3], out_scale=0.1)
        self.rng = rngs[4]  # dropout masks
        self.qc = MLP([c.latent_dim, c.hidden_dim, n_actions], rng=rngs[5])
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.qc_target = self.qc.copy()
        self.lam = float(c.lambda_init)
        self.steps = 0

    # -- evaluation helpers -------------------------------------------------
    def networks(self) -> dict[str, MLP]:
        return {
            "encoder": self.encoder, "q1": self.q1, "q2": self.q2, "qc": self.qc,
            "actor": self.actor, "q1_target": self.q1_target, "q2_target": self.q2_target,
            "qc_target": self.qc_target,
        }

    def encode(self, obs: np.ndarray) -> np.ndarray:
        return self.encoder(np.atleast_2d(obs))

    def policy(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        logp = log_softmax(self.actor(z))
        return logp, np.exp(logp)

    def safety_values(self, z: np.ndarray, target: bool = False) -> np.ndarray:
        net = self.qc_target if target else self.qc
        return sigmoid(net(z))

    def action_probs(self, obs: np.ndarray) -> np.ndarray:
        return self.policy(self.encode(obs))[1][0]

    def select_action(self, obs: np.ndarray, mode: str = "sample",
                      rng: np.random.Generator | None = None) -> int:
        obs = np.asarray(obs, dtype=float)
        if obs[-1] == 1.0:
            raise LearnerUsageError("cannot select an action in a terminal state")
        probs = self.action_probs(obs)
        if mode == "greedy":
            return int(np.argmax(probs))  # first maximum wins ties
        if mode != "sample":
            raise ValueError(f"unknown selection mode {mode}")
        if rng is None:
            raise ValueError("sample mode needs an rng")
        cdf = np.cumsum(probs)
        return int(min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"),
                       self.n_actions - 1))

    # -- targets ------------------------------------------------------------
    def compute_targets(self, batch: Batch) -> tuple[np.ndarray, np.ndarray]:
        c = self.config
        z2 = self.encode(batch.next_obs)
        logp, pi = self.policy(z2)
        q_min = np.minimum(self.q1_target(z2), self.q2_target(z2))
        v_r = np.sum(pi * (q_min - c.alpha * logp), axis=1)
        v_c = np.sum(pi * self.safety_values(z2, target=True), axis=1)
        live = 1.0 - batch.dones
        y_r = c.reward_scale * batch.rewards + c.gamma * live * v_r
        y_c = batch.costs + c.gamma * live * v_c
        return y_r, y_c

    # -- critic / encoder ---------------------------------------------------
    def critic_losses(self, batch: Batch, y_r, y_c, masks=None, dropout: float = 0.0):
        """Losses and per-loss gradients at the current parameters.

        Returns ``(L_r, L_c, grads_r, grads_c)`` where ``grads_r`` maps
        encoder/q1/q2 and ``grads_c`` maps encoder/qc.
        """
        n = len(batch)
        rows = np.arange(n)
        z, enc_cache = self.encoder.forward(batch.obs, dropout, self.rng, masks)
        q1_out, c1 = self.q1.forward(z)
        q2_out, c2 = self.q2.forward(z)
        qc_logit, cc = self.qc.forward(z)
        e1 = q1_out[rows, batch.actions] - y_r
        e2 = q2_out[rows, batch.actions] - y_r
        qc_val = sigmoid(qc_logit[rows, batch.actions])
        ec = qc_val - y_c
        l_r = 0.5 * (float(np.mean(e1 ** 2)) + float(np.mean(e2 ** 2)))
        l_c = float(np.mean(ec ** 2))

        d1 = np.zeros_like(q1_out)
        d1[rows, batch.actions] = e1 / n
        d2 = np.zeros_like(q2_out)
        d2[rows, batch.actions] = e2 / n
        dc = np.zeros_like(qc_logit)
        dc[rows, batch.actions] = 2.0 * ec * qc_val * (1.0 - qc_val) / n
        g1, dz1 = self.q1.backward(c1, d1)
        g2, dz2 = self.q2.backward(c2, d2)
        gc, dzc = self.qc.backward(cc, dc)
        g_enc_r, _ = self.encoder.backward(enc_cache, dz1 + dz2)
        g_enc_c, _ = self.encoder.backward(enc_cache, dzc)
        grads_r = {"encoder": g_enc_r, "q1": g1, "q2": g2}
        grads_c = {"encoder": g_enc_c, "qc": gc}
        return l_r, l_c, grads_r, grads_c

    @staticmethod
    def combine(grads_r, grads_c, lam: float):
        """Gradients of ``L_enc = L_r + lam L_c``."""
        out = {k: list(v) for k, v in grads_r.items()}
        if lam != 0.0:
            out["encoder"] = [a + lam * b for a, b in zip(out["encoder"], grads_c["encoder"])]
        out["qc"] = [lam * g for g in grads_c["qc"]]
        return out

    def critic_update(self, batch: Batch, targets=None) -> dict:
        c = self.config
        y_r, y_c = targets if targets is not None else self.compute_targets(batch)
        l_r, l_c, grads_r, grads_c = self.critic_losses(batch, y_r, y_c, dropout=c.dropout)
        l_enc = l_r + self.lam * l_c
        _check_finite("critic loss", l_r, l_c, l_enc)
        grads = self.combine(grads_r, grads_c, self.lam)
        _check_finite("critic gradient", *(g for gl in grads.values() for g in gl))
        enc_g = grads["encoder"]
        head_g = [grads["q1"], grads["q2"], grads["qc"]]
        if c.grad_clip:
            (enc_g,), _ = clip_grads([enc_g], c.grad_clip)
            head_g, _ = clip_grads(head_g, c.grad_clip)
        self.encoder.sgd(enc_g, c.lr_e)
        self.q1.sgd(head_g[0], c.lr_q)
        self.q2.sgd(head_g[1], c.lr_q)
        if self.lam != 0.0:
            self.qc.sgd(head_g[2], c.lr_q)
        return {"L_r": l_r, "L_c": l_c, "L_enc": l_enc,
                "grad_critic": grad_norm(grads["encoder"], grads["q1"], grads["q2"], grads["qc"])}

    # -- multiplier -----------------------------------------------------------
    def update_lagrange(self, batch: Batch, z: np.ndarray | None = None) -> float:
        c = self.config
        z = self.encode(batch.obs) if z is None else z
        qc = self.safety_values(z)[np.arange(len(batch)), batch.actions]
        surrogate = max(0.0, float(np.mean(qc)) - c.eps_c)
        self.lam = max(0.0, self.lam + c.lr_lambda * surrogate)
        return self.lam

    # -- actor ----------------------------------------------------------------
    def actor_update(self, batch: Batch, z: np.ndarray | None = None) -> dict:
        c = self.config
        z = self.encode(batch.obs) if z is None else z
        logits, cache = self.actor.forward(z)
        q_min = np.minimum(self.q1(z), self.q2(z))
        q_c = self.safety_values(z) if c.beta != 0.0 else None
        l_pi, l_pr, l_pc, dlogits = actor_objective(logits, q_min, q_c, c.alpha, c.beta, c.eps_c)
        _check_finite("actor loss", l_pi)
        grads, _ = self.actor.backward(cache, dlogits)
        _check_finite("actor gradient", *grads)
        if c.grad_clip:
            (grads,), _ = clip_grads([grads], c.grad_clip)
        self.actor.sgd(grads, c.lr_pi)
        return {"L_pi": l_pi, "L_pi_r": l_pr, "L_pi_c": l_pc, "grad_actor": grad_norm(grads)}

    def soft_update(self) -> None:
        rate = self.config.soft_rate
        self.q1_target.soft_update(self.q1, rate)
        self.q2_target.soft_update(self.q2, rate)
        self.qc_target.soft_update(self.qc, rate)

    def train_step(self, batch: Batch) -> dict:
        report = self.critic_update(batch)
        z = self.encode(batch.obs)
        report["lambda"] = self.update_lagrange(batch, z)
        report.update(self.actor_update(batch, z))
        self.soft_update()
        self.steps += 1
        report["step"] = self.steps
        return report

    # -- checkpoints --------------------------------------------------------
    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for name, net in self.networks().items():
            for i, p in enumerate(net.params):
                out[f"{name}.{i}"] = p
        return out

    def save(self, path: str | Path, extra: dict | None = None) -> Path:
        path = Path(path)
        meta = {
            "version": CHECKPOINT_VERSION,
            "kind": type(self).__name__,
            "obs_dim": self.obs_dim,
            "n_actions": self.n_actions,
            "seed": self.seed,
            "lambda": self.lam,
            "steps": self.steps,
            "config": asdict(self.config),
            "rng": self.rng.bit_generator.state,
            "extra": extra or {},
        }
        with path.open("wb") as fh:
            np.savez(fh, __meta__=np.array(json.dumps(meta)), **self.state_arrays())
        return path

    @classmethod
    def load(cls, path: str | Path) -> tuple["SafetySAC", dict]:
        with np.load(Path(path), allow_pickle=False) as data:
            meta = json.loads(str(data["__meta__"]))
            if meta.get("version") != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
            learner = cls(meta["obs_dim"], meta["n_actions"], LearnerConfig(**meta["config"]),
                          meta["seed"])
            for name, net in learner.networks().items():
                for i in range(len(net.params)):
                    net.params[i] = np.array(data[f"{name}.{i}"])
        learner.lam = meta["lambda"]
        learner.steps = meta["steps"]
        learner.rng.bit_generator.state = meta["rng"]
        return learner, meta["extra"]
