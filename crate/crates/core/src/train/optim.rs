//! Parameter update rules over dense embedding tables.

use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Adam { beta1: f64, beta2: f64, eps: f64 },
    Sgd,
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Gradient buffers shaped like a model's two tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub entities: Vec<f64>,
    pub relations: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(model: &Model) -> Self {
        Self {
            entities: vec![0.0; model.entities.values().len()],
            relations: vec![0.0; model.relations.values().len()],
        }
    }

    pub fn clear(&mut self) {
        self.entities.fill(0.0);
        self.relations.fill(0.0);
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    step: i32,
    m: Gradients,
    v: Gradients,
}

impl Optimizer {
    pub(crate) fn new(kind: OptimizerKind, lr: f64, model: &Model) -> Self {
        Self {
            kind,
            lr,
            step: 0,
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
        }
    }

    pub(crate) fn apply(&mut self, model: &mut Model, grads: &Gradients) {
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                sgd(model.entities.values_mut(), &grads.entities, self.lr);
                sgd(model.relations.values_mut(), &grads.relations, self.lr);
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(self.step);
                let c2 = 1.0 - beta2.powi(self.step);
                let step = AdamStep {
                    lr: self.lr,
                    beta1,
                    beta2,
                    eps,
                    c1,
                    c2,
                };
                step.apply(model.entities.values_mut(), &grads.entities, &mut self.m.entities, &mut self.v.entities);
                step.apply(
                    model.relations.values_mut(),
                    &grads.relations,
                    &mut self.m.relations,
                    &mut self.v.relations,
                );
            }
        }
    }
}

fn sgd(params: &mut [f64], grads: &[f64], lr: f64) {
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= lr * g;
    }
}

struct AdamStep {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    c1: f64,
    c2: f64,
}

impl AdamStep {
    fn apply(&self, params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64]) {
        for i in 0..params.len() {
            let g = grads[i];
            m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
            v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = m[i] / self.c1;
            let v_hat = v[i] / self.c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
