//! Browser bindings for the interactive demo page (`www/index.html`).
//!
//! The page drives three operations: stepping the trainer and watching
//! the loss fall, projecting the translated node embeddings to 2-D under
//! a selectable translator, and scoring candidate links between two
//! picked nodes. All state lives in one exported [`Demo`] object; the
//! JavaScript side only draws.

mod demo;

pub use demo::{karate_graph, DemoCore, KARATE_EDGES, KARATE_FACTION};

use paire::TranslatorMode;
use wasm_bindgen::prelude::*;

fn parse_mode(name: &str) -> Result<TranslatorMode, JsError> {
    name.parse::<TranslatorMode>()
        .map_err(|e| JsError::new(&e.to_string()))
}

/// One training session over the built-in karate-club graph.
#[wasm_bindgen]
pub struct Demo {
    inner: DemoCore,
}

#[wasm_bindgen]
impl Demo {
    /// Fresh model; the same seed always replays the same training run.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, learning_rate: f64) -> Result<Demo, JsError> {
        let inner = DemoCore::new(u64::from(seed), learning_rate)?;
        Ok(Demo { inner })
    }

    /// Run `epochs` more training passes; returns the latest mean loss.
    pub fn step(&mut self, epochs: u32) -> Result<f64, JsError> {
        Ok(self.inner.step(epochs as usize)?)
    }

    pub fn epochs_done(&self) -> u32 {
        self.inner.epochs_done() as u32
    }

    /// Mean loss per epoch so far, in epoch order.
    pub fn losses(&self) -> Vec<f64> {
        self.inner.losses().to_vec()
    }

    /// 2-D layout of all nodes under `translator` (one of `sum`, `mean`,
    /// `max`, `min`), interleaved `[x0, y0, x1, y1, ...]` in [-1, 1].
    pub fn positions(&self, translator: &str) -> Result<Vec<f32>, JsError> {
        Ok(self.inner.positions(parse_mode(translator)?)?)
    }

    /// Cosine similarity of the two nodes' embeddings under `translator`.
    pub fn link_score(&self, u: u32, v: u32, translator: &str) -> Result<f64, JsError> {
        let n = self.inner.graph().num_nodes() as u32;
        if u >= n || v >= n {
            return Err(JsError::new(&format!("node id out of range (0..{n})")));
        }
        Ok(self
            .inner
            .link_score(u as usize, v as usize, parse_mode(translator)?)?)
    }

    pub fn num_nodes(&self) -> u32 {
        self.inner.graph().num_nodes() as u32
    }

    /// Edge endpoints, interleaved `[u0, v0, u1, v1, ...]`.
    pub fn edges(&self) -> Vec<u32> {
        self.inner
            .graph()
            .edges()
            .iter()
            .flat_map(|&(u, v)| [u as u32, v as u32])
            .collect()
    }

    /// Faction label per node (0 or 1).
    pub fn factions(&self) -> Vec<u32> {
        self.inner.graph().labels().iter().map(|&l| l as u32).collect()
    }

    pub fn is_edge(&self, u: u32, v: u32) -> bool {
        let n = self.inner.graph().num_nodes() as u32;
        u < n && v < n && self.inner.graph().has_edge(u as usize, v as usize)
    }
}
