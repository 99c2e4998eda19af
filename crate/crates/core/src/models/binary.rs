use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_embedding, BinaryModelConfig, InputEmbedding, ModelKind, Network};
use crate::corpus::TokenSequence;
use crate::embedding::EmbeddingTable;
use crate::error::Result;
use crate::neural::activations::leaky_relu_grad;
use crate::neural::{
    dropout, ensure_finite, leaky_relu, masked_max_backward, masked_max_over_rows, sigmoid, Dense, Lstm,
    LstmCache, Mode, Param, TimeMax,
};

/// Stage-1 toxic / non-toxic gate: LSTM, masked max over time, dropout,
/// Leaky ReLU dense layers and a single sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryClassifier {
    pub config: BinaryModelConfig,
    pub embedding: EmbeddingTable,
    pub lstm: Lstm,
    pub hidden: Vec<Dense>,
    pub output: Dense,
}

#[derive(Debug, Clone)]
pub struct BinaryCache {
    input: InputEmbedding,
    lstm: LstmCache,
    h_rows: usize,
    time_max: TimeMax,
    drop_scale: Array1<f64>,
    /// Input to each hidden layer, then the input to the output layer.
    layer_inputs: Vec<Array1<f64>>,
    pre_acts: Vec<Array1<f64>>,
    pub logit: f64,
}

impl BinaryClassifier {
    pub fn new(config: BinaryModelConfig, embedding: EmbeddingTable) -> Result<Self> {
        config.validate()?;
        check_embedding(&embedding, config.embedding_dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let lstm = Lstm::new("binary.lstm", config.embedding_dim, config.lstm_units, &mut rng);
        let mut width = config.lstm_units;
        let mut hidden = Vec::with_capacity(config.dense_hidden.len());
        for (i, &units) in config.dense_hidden.iter().enumerate() {
            hidden.push(Dense::new(&format!("binary.dense{i}"), width, units, &mut rng));
            width = units;
        }
        let output = Dense::new("binary.output", width, 1, &mut rng);
        Ok(BinaryClassifier { config, embedding, lstm, hidden, output })
    }

    /// Same architecture with every non-embedding parameter set to zero.
    pub fn zeroed(config: BinaryModelConfig, embedding: EmbeddingTable) -> Result<Self> {
        let mut m = Self::new(config, embedding)?;
        m.zero_weights();
        Ok(m)
    }

    pub fn zero_weights(&mut self) {
        for p in self.params_mut().into_iter().skip(1) {
            p.value.fill(0.0);
        }
    }

    /// Closed-form parameter count for a vocabulary of `vocab` tokens.
    pub fn expected_parameter_count(config: &BinaryModelConfig, vocab: usize) -> usize {
        let (d, h) = (config.embedding_dim, config.lstm_units);
        let mut total = vocab * d + 4 * (d * h + h * h + h);
        let mut width = h;
        for &units in &config.dense_hidden {
            total += width * units + units;
            width = units;
        }
        total + width + 1
    }

    pub fn predict_proba(&self, seq: &TokenSequence) -> Result<f64> {
        Ok(self.predict(seq)?[0])
    }
}

impl Network for BinaryClassifier {
    type Cache = BinaryCache;

    fn kind(&self) -> ModelKind {
        ModelKind::Binary
    }

    fn outputs(&self) -> usize {
        1
    }

    fn max_len(&self) -> usize {
        self.config.max_len
    }

    fn embedding(&self) -> &EmbeddingTable {
        &self.embedding
    }

    fn forward(&self, seq: &TokenSequence, mode: Mode, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, BinaryCache)> {
        let input = InputEmbedding::build(&self.embedding, seq, self.config.input, self.config.max_len)?;
        let mask = input.mask();
        let (h, lstm) = self.lstm.forward(input.x.view(), &mask, false)?;
        let time_max = masked_max_over_rows(h.view(), &mask);
        let (mut v, drop_scale) = dropout(&time_max.values, self.config.dropout_rate, mode, rng)?;
        let mut layer_inputs = Vec::with_capacity(self.hidden.len() + 1);
        let mut pre_acts = Vec::with_capacity(self.hidden.len());
        for layer in &self.hidden {
            let a = layer.forward(v.view())?;
            let next = a.mapv(|x| leaky_relu(x, self.config.leaky_slope));
            layer_inputs.push(v);
            pre_acts.push(a);
            v = next;
        }
        let logit = self.output.forward(v.view())?[0];
        layer_inputs.push(v);
        let p = sigmoid(logit);
        ensure_finite("binary output", &ndarray::arr1(&[p]))?;
        let cache = BinaryCache { input, lstm, h_rows: h.nrows(), time_max, drop_scale, layer_inputs, pre_acts, logit };
        Ok((vec![p], cache))
    }

    fn backward(&mut self, seq: &TokenSequence, cache: &BinaryCache, dlogits: &[f64]) {
        let n = self.hidden.len();
        let dy = ndarray::arr1(&[dlogits[0]]);
        let mut dv = self.output.backward(cache.layer_inputs[n].view(), dy.view());
        for i in (0..n).rev() {
            let slope = self.config.leaky_slope;
            let da = &dv * &cache.pre_acts[i].mapv(|x| leaky_relu_grad(x, slope));
            dv = self.hidden[i].backward(cache.layer_inputs[i].view(), da.view());
        }
        let dv = dv * &cache.drop_scale;
        let dh: Array2<f64> = masked_max_backward(&cache.time_max, cache.h_rows, dv.view());
        let dx = self.lstm.backward(cache.input.x.view(), &cache.lstm, dh.view());
        cache.input.backward(&mut self.embedding, seq, dx.view());
    }

    fn params(&self) -> Vec<&Param> {
        let mut v = vec![&self.embedding.table];
        v.extend(self.lstm.params());
        for d in &self.hidden {
            v.extend(d.params());
        }
        v.extend(self.output.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = vec![&mut self.embedding.table];
        v.extend(self.lstm.params_mut());
        for d in &mut self.hidden {
            v.extend(d.params_mut());
        }
        v.extend(self.output.params_mut());
        v
    }
}
