use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_embedding, prefix_mask, InputEmbedding, ModelKind, MultiLabelModelConfig, Network};
use crate::corpus::{TokenSequence, NUM_LABELS};
use crate::embedding::EmbeddingTable;
use crate::error::Result;
use crate::neural::activations::relu_grad;
use crate::neural::{
    ensure_finite, masked_max_backward, masked_max_over_rows, maxpool1d, maxpool1d_backward, relu, sigmoid, Attention,
    AttentionOutput, BiLstm, BiLstmCache, Conv1d, Dense, Mode, Param, Pooled, TimeMax,
};

/// Stage-2 tagger: conv/pool stack, BiLSTM, attention pooling and six
/// independent sigmoid outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelClassifier {
    pub config: MultiLabelModelConfig,
    pub embedding: EmbeddingTable,
    pub convs: Vec<Conv1d>,
    pub bilstm: BiLstm,
    pub attention: Option<Attention>,
    pub output: Dense,
}

#[derive(Debug, Clone)]
struct ConvStep {
    input: Array2<f64>,
    pre: Array2<f64>,
    /// Conv output rows whose window starts on a real token.
    valid: usize,
    pooled: Pooled,
}

#[derive(Debug, Clone)]
enum Summary {
    Attention(AttentionOutput),
    Max(TimeMax),
    /// No real rows reached the BiLSTM; the context is the zero vector.
    Empty,
}

#[derive(Debug, Clone)]
pub struct MultiLabelCache {
    input: InputEmbedding,
    convs: Vec<ConvStep>,
    states_in: Array2<f64>,
    bilstm: BiLstmCache,
    states: Array2<f64>,
    summary: Summary,
    context: Array1<f64>,
    pub logits: Vec<f64>,
}

impl MultiLabelCache {
    /// Attention weights over the post-stack positions, if attention ran.
    pub fn attention_weights(&self) -> Option<&Array1<f64>> {
        match &self.summary {
            Summary::Attention(a) => Some(&a.alpha),
            _ => None,
        }
    }
}

impl MultiLabelClassifier {
    pub fn new(config: MultiLabelModelConfig, embedding: EmbeddingTable) -> Result<Self> {
        config.validate()?;
        check_embedding(&embedding, config.embedding_dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let mut channels = config.embedding_dim;
        let mut convs = Vec::with_capacity(config.conv.len());
        for (i, spec) in config.conv.iter().enumerate() {
            convs.push(Conv1d::new(&format!("multilabel.conv{i}"), channels, spec.filters, spec.kernel, &mut rng));
            channels = spec.filters;
        }
        let h = config.bilstm_units;
        let bilstm = BiLstm::new("multilabel.bilstm", channels, h, &mut rng);
        let attention = config.attention.then(|| Attention::new("multilabel.attention", 2 * h, &mut rng));
        let output = Dense::new("multilabel.output", 2 * h, NUM_LABELS, &mut rng);
        Ok(MultiLabelClassifier { config, embedding, convs, bilstm, attention, output })
    }

    pub fn zeroed(config: MultiLabelModelConfig, embedding: EmbeddingTable) -> Result<Self> {
        let mut m = Self::new(config, embedding)?;
        m.zero_weights();
        Ok(m)
    }

    /// Sets every non-embedding parameter to zero.
    pub fn zero_weights(&mut self) {
        for p in self.params_mut().into_iter().skip(1) {
            p.value.fill(0.0);
        }
    }

    pub fn expected_parameter_count(config: &MultiLabelModelConfig, vocab: usize) -> usize {
        let mut total = vocab * config.embedding_dim;
        let mut channels = config.embedding_dim;
        for spec in &config.conv {
            total += spec.kernel * channels * spec.filters + spec.filters;
            channels = spec.filters;
        }
        let h = config.bilstm_units;
        total += 2 * 4 * (channels * h + h * h + h);
        if config.attention {
            total += 2 * h + 1;
        }
        total + 2 * h * NUM_LABELS + NUM_LABELS
    }

    pub fn predict_proba(&self, seq: &TokenSequence) -> Result<[f64; NUM_LABELS]> {
        let p = self.predict(seq)?;
        let mut out = [0.0; NUM_LABELS];
        out.copy_from_slice(&p);
        Ok(out)
    }
}

impl Network for MultiLabelClassifier {
    type Cache = MultiLabelCache;

    fn kind(&self) -> ModelKind {
        ModelKind::MultiLabel
    }

    fn outputs(&self) -> usize {
        NUM_LABELS
    }

    fn max_len(&self) -> usize {
        self.config.max_len
    }

    fn embedding(&self) -> &EmbeddingTable {
        &self.embedding
    }

    fn forward(&self, seq: &TokenSequence, _mode: Mode, _rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, MultiLabelCache)> {
        let input = InputEmbedding::build(&self.embedding, seq, self.config.input, self.config.max_len)?;
        let mut x = input.x.clone();
        let mut len = input.len;
        let mut steps = Vec::with_capacity(self.convs.len());
        let pool = self.config.pool;
        for conv in &self.convs {
            let pre = conv.forward(x.view())?;
            let valid = len.min(pre.nrows());
            let mut act = pre.mapv(relu);
            act.slice_mut(ndarray::s![valid.., ..]).fill(0.0);
            let pooled = maxpool1d(act.view(), pool)?;
            len = valid.div_ceil(pool).min(pooled.output.nrows());
            let next = pooled.output.clone();
            steps.push(ConvStep { input: x, pre, valid, pooled });
            x = next;
        }
        let mask = prefix_mask(x.nrows(), len);
        let (states, bilstm) = self.bilstm.forward(x.view(), &mask)?;
        let (summary, context) = if len == 0 {
            (Summary::Empty, Array1::zeros(states.ncols()))
        } else if let Some(att) = &self.attention {
            let out = att.forward(states.view(), &mask)?;
            let z = out.context.clone();
            (Summary::Attention(out), z)
        } else {
            let tm = masked_max_over_rows(states.view(), &mask);
            let z = tm.values.clone();
            (Summary::Max(tm), z)
        };
        let logits = self.output.forward(context.view())?;
        let probs: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
        ensure_finite("multi-label output", &Array1::from(probs.clone()))?;
        let cache = MultiLabelCache {
            input,
            convs: steps,
            states_in: x,
            bilstm,
            states,
            summary,
            context,
            logits: logits.to_vec(),
        };
        Ok((probs, cache))
    }

    fn backward(&mut self, seq: &TokenSequence, cache: &MultiLabelCache, dlogits: &[f64]) {
        let dy = Array1::from(dlogits.to_vec());
        let dz = self.output.backward(cache.context.view(), dy.view());
        let rows = cache.states.nrows();
        let dstates = match (&cache.summary, self.attention.as_mut()) {
            (Summary::Attention(out), Some(att)) => att.backward(cache.states.view(), out, dz.view()),
            (Summary::Max(tm), _) => masked_max_backward(tm, rows, dz.view()),
            _ => Array2::zeros(cache.states.raw_dim()),
        };
        let mut dx = self.bilstm.backward_pass(cache.states_in.view(), &cache.bilstm, dstates.view());
        for (conv, step) in self.convs.iter_mut().zip(&cache.convs).rev() {
            let mut dpre = maxpool1d_backward(&step.pooled, dx.view());
            dpre.zip_mut_with(&step.pre, |g, &z| *g *= relu_grad(z));
            dpre.slice_mut(ndarray::s![step.valid.., ..]).fill(0.0);
            dx = conv.backward(step.input.view(), dpre.view());
        }
        cache.input.backward(&mut self.embedding, seq, dx.view());
    }

    fn params(&self) -> Vec<&Param> {
        let mut v = vec![&self.embedding.table];
        for c in &self.convs {
            v.extend(c.params());
        }
        v.extend(self.bilstm.params());
        if let Some(a) = &self.attention {
            v.extend(a.params());
        }
        v.extend(self.output.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = vec![&mut self.embedding.table];
        for c in &mut self.convs {
            v.extend(c.params_mut());
        }
        v.extend(self.bilstm.params_mut());
        if let Some(a) = &mut self.attention {
            v.extend(a.params_mut());
        }
        v.extend(self.output.params_mut());
        v
    }
}

impl MultiLabelClassifier {
    /// Post-stack hidden states for one sequence, `L_post × 2h`.
    pub fn states(&self, seq: &TokenSequence) -> Result<Array2<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Ok(self.forward(seq, Mode::Inference, &mut rng)?.1.states)
    }

    /// Number of real rows after the conv/pool stack for a document of `true_len` tokens.
    pub fn post_stack_valid(&self, true_len: usize) -> usize {
        let mut len = true_len.min(self.config.max_len);
        let mut rows = self.config.max_len;
        for spec in &self.config.conv {
            rows = rows + 1 - spec.kernel;
            let valid = len.min(rows);
            rows /= self.config.pool;
            len = valid.div_ceil(self.config.pool).min(rows);
        }
        len
    }
}
