"""Reference discrete soft actor-critic without any safety machinery.

Used to check that Safety-SAC with beta = 0 and a frozen zero multiplier
reduces exactly to the plain algorithm. Seeding mirrors :class:`SafetySAC`
so both start from the same parameters.
"""

from __future__ import annotations

import numpy as np

from .batch import Batch
from .config import LearnerConfig
from .nets import MLP, log_softmax


class PlainSAC:
    def __init__(self, obs_dim: int, n_actions: int, config: LearnerConfig = LearnerConfig(),
                 seed: int = 0):
        c = self.config = config
        rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(6)]
        self.encoder = MLP([obs_dim, c.hidden_dim, c.latent_dim], out_act="tanh", rng=rngs[0])
        self.q1 = MLP([c.latent_dim, c.hidden_dim, n_actions], rng=rngs[1])
        self.q2 = MLP([c.latent_dim, c.hidden_dim, n_actions], rng=rngs[2])
        self.actor = MLP([c.latent_dim, c.hidden_dim, n_actions], rng=rngs[3], out_scale=0.1)
        self.rng = rngs[4]
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()

    def train_step(self, batch: Batch) -> dict:
        c = self.config
        n = len(batch)
        rows = np.arange(n)

        # soft Bellman target with the exact expectation over next actions
        z_next = self.encoder(batch.next_obs)
        logp_next = log_softmax(self.actor(z_next))
        pi_next = np.exp(logp_next)
        q_next = np.minimum(self.q1_target(z_next), self.q2_target(z_next))
        soft_v = np.sum(pi_next * (q_next - c.alpha * logp_next), axis=1)
        y = c.reward_scale * batch.rewards + c.gamma * (1.0 - batch.dones) * soft_v

        z, enc_cache = self.encoder.forward(batch.obs, c.dropout, self.rng)
        q1_out, c1 = self.q1.forward(z)
        q2_out, c2 = self.q2.forward(z)
        e1 = q1_out[rows, batch.actions] - y
        e2 = q2_out[rows, batch.actions] - y
        loss_q = 0.5 * (float(np.mean(e1 ** 2)) + float(np.mean(e2 ** 2)))
        d1 = np.zeros_like(q1_out)
        d1[rows, batch.actions] = e1 / n
        d2 = np.zeros_like(q2_out)
        d2[rows, batch.actions] = e2 / n
        g1, dz1 = self.q1.backward(c1, d1)
        g2, dz2 = self.q2.backward(c2, d2)
        g_enc, _ = self.encoder.backward(enc_cache, dz1 + dz2)
        self.encoder.sgd(g_enc, c.lr_e)
        self.q1.sgd(g1, c.lr_q)
        self.q2.sgd(g2, c.lr_q)

        z = self.encoder(batch.obs)
        logits, cache = self.actor.forward(z)
        logp = log_softmax(logits)
        pi = np.exp(logp)
        f = c.alpha * logp - np.minimum(self.q1(z), self.q2(z))
        loss_pi = float(np.sum(pi * f)) / n
        dlogits = pi * (f - np.sum(pi * f, axis=1, keepdims=True)) / n
        g_pi, _ = self.actor.backward(cache, dlogits)
        self.actor.sgd(g_pi, c.lr_pi)

        self.q1_target.soft_update(self.q1, c.soft_rate)
        self.q2_target.soft_update(self.q2, c.soft_rate)
        return {"L_r": loss_q, "L_pi": loss_pi}
