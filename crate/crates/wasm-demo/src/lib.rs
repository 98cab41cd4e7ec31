//! Browser bindings. `www/index.html` drives these from plain JavaScript.

pub mod demo;

use wasm_bindgen::prelude::*;

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("demo values serialize")
}

#[wasm_bindgen]
pub struct Demo(demo::Demo);

#[wasm_bindgen]
impl Demo {
    /// Train a hashed-embedding model on synthetic sentences.
    #[wasm_bindgen(constructor)]
    pub fn new(train_size: usize, dim: usize, seed: u64) -> Result<Demo, JsError> {
        demo::Demo::train(train_size, dim, seed)
            .map(Demo)
            .map_err(|e| JsError::new(&e))
    }

    pub fn summary(&self) -> String {
        to_json(self.0.summary())
    }

    pub fn analyze(&self, text: &str) -> Result<String, JsError> {
        self.0
            .analyze(text)
            .map(|rows| to_json(&rows))
            .map_err(|e| JsError::new(&e))
    }

    pub fn inspect(&self, text: &str, mention: usize) -> Result<String, JsError> {
        self.0
            .inspect(text, mention)
            .map(|i| to_json(&i))
            .map_err(|e| JsError::new(&e))
    }
}

#[wasm_bindgen]
pub fn windows(text: &str, k: usize) -> String {
    to_json(&demo::windows(text, k))
}
