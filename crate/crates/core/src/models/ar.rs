//! Autoregressive ansatz built from masked dense layers.
//!
//! Every layer keeps `features` units per spin site. The first layer at site
//! `i` sees spins `0..i` (exclusive mask); later layers and the output layer at
//! site `i` see units of sites `0..=i` (inclusive mask). Hidden layers use
//! `tanh`. The output layer produces two numbers per site which become the
//! conditional amplitude vector `η = (η₊, η₋)` with `|η₊|² + |η₋|² = 1`:
//!
//! * [`ArVariant::Joint`]: one complex network, `η = o / ‖o‖`;
//! * [`ArVariant::Split`]: a real modulus network `m` and a real phase network
//!   `p`, `log η_k = ½ (m_k − ln Σ e^{m}) + i p_k`.
//!
//! `log Ψ(σ) = Σᵢ log η_{σᵢ}(σ₀..σᵢ₋₁)`, which is normalized by construction.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::{cln, cnorm_sqr, ctanh, Real};

use super::rbm::check_len;
use super::Wavefunction;

/// Output parameterization of the autoregressive ansatz.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArVariant {
    Joint,
    Split,
}

#[derive(Clone, Debug, PartialEq)]
struct MaskedLayer<T> {
    in_features: usize,
    out_features: usize,
    exclusive: bool,
    /// Offset of site `i`'s weight block (`out × fan_in(i)·in`, row-major).
    offsets: Vec<usize>,
    weights: Vec<Complex<T>>,
    /// `n × out`.
    bias: Vec<Complex<T>>,
}

impl<T: Real> MaskedLayer<T> {
    fn new(n: usize, in_features: usize, out_features: usize, exclusive: bool) -> Self {
        let mut offsets = Vec::with_capacity(n + 1);
        let mut total = 0;
        for i in 0..n {
            offsets.push(total);
            let fan = if exclusive { i } else { i + 1 };
            total += out_features * fan * in_features;
        }
        offsets.push(total);
        let z = Complex::new(T::zero(), T::zero());
        Self {
            in_features,
            out_features,
            exclusive,
            offsets,
            weights: vec![z; total],
            bias: vec![z; n * out_features],
        }
    }

    fn fan_width(&self, site: usize) -> usize {
        let fan = if self.exclusive { site } else { site + 1 };
        fan * self.in_features
    }

    fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Pre-activations of `site` from the flattened previous-layer units.
    fn forward_site(&self, site: usize, input: &[Complex<T>], out: &mut [Complex<T>]) {
        let width = self.fan_width(site);
        let x = &input[..width];
        let block = &self.weights[self.offsets[site]..self.offsets[site + 1]];
        for (o, dst) in out.iter_mut().enumerate() {
            let row = &block[o * width..(o + 1) * width];
            let mut acc = self.bias[site * self.out_features + o];
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            *dst = acc;
        }
    }

    /// Accumulates parameter gradients and input sensitivities for `site`.
    fn backward_site(
        &self,
        site: usize,
        input: &[Complex<T>],
        delta: &[Complex<T>],
        grad_w: &mut [Complex<T>],
        grad_b: &mut [Complex<T>],
        delta_in: Option<&mut [Complex<T>]>,
    ) {
        let width = self.fan_width(site);
        let off = self.offsets[site];
        for (o, &d) in delta.iter().enumerate() {
            grad_b[site * self.out_features + o] += d;
            let g = &mut grad_w[off + o * width..off + (o + 1) * width];
            for (gw, &x) in g.iter_mut().zip(&input[..width]) {
                *gw += d * x;
            }
        }
        if let Some(din) = delta_in {
            let block = &self.weights[off..self.offsets[site + 1]];
            for (o, &d) in delta.iter().enumerate() {
                for (dx, &w) in din[..width].iter_mut().zip(&block[o * width..(o + 1) * width]) {
                    *dx += d * w;
                }
            }
        }
    }
}

/// Masked multilayer network with `n_hidden_layers` tanh layers and a linear
/// two-output head per site.
#[derive(Clone, Debug, PartialEq)]
struct MaskedNet<T> {
    n: usize,
    layers: Vec<MaskedLayer<T>>,
}

/// Per-layer activations of one configuration; `acts[0]` holds the spins.
struct Activations<T> {
    acts: Vec<Vec<Complex<T>>>,
    outputs: Vec<Complex<T>>,
}

impl<T: Real> MaskedNet<T> {
    fn new(n: usize, n_hidden_layers: usize, features: usize) -> Self {
        let mut layers = Vec::with_capacity(n_hidden_layers + 1);
        let mut in_f = 1;
        for l in 0..n_hidden_layers {
            layers.push(MaskedLayer::new(n, in_f, features, l == 0));
            in_f = features;
        }
        layers.push(MaskedLayer::new(n, in_f, 2, n_hidden_layers == 0));
        Self { n, layers }
    }

    fn n_params(&self) -> usize {
        self.layers.iter().map(MaskedLayer::n_params).sum()
    }

    fn empty_activations(&self) -> Activations<T> {
        let z = Complex::new(T::zero(), T::zero());
        let mut acts = vec![vec![z; self.n]];
        for layer in &self.layers[..self.layers.len() - 1] {
            acts.push(vec![z; self.n * layer.out_features]);
        }
        Activations { acts, outputs: vec![z; 2 * self.n] }
    }

    /// Computes every layer at `site`. Requires sites `< site` done already and
    /// `acts[0]` filled with spins `< site`.
    fn forward_site(&self, site: usize, a: &mut Activations<T>) {
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let of = layer.out_features;
            let (inputs, rest) = a.acts.split_at_mut(l + 1);
            let input = &inputs[l];
            if l == last {
                layer.forward_site(site, input, &mut a.outputs[site * of..(site + 1) * of]);
            } else {
                let out = &mut rest[0][site * of..(site + 1) * of];
                layer.forward_site(site, input, out);
                for z in out.iter_mut() {
                    *z = ctanh(*z);
                }
            }
        }
    }

    fn forward(&self, spins: &[i8]) -> Activations<T> {
        let mut a = self.empty_activations();
        for (x, &s) in a.acts[0].iter_mut().zip(spins) {
            *x = Complex::new(T::lit(f64::from(s)), T::zero());
        }
        for site in 0..self.n {
            self.forward_site(site, &mut a);
        }
        a
    }

    /// Holomorphic vector-Jacobian product `Σ seed_{ik} ∂o_{ik}/∂θ`, laid out
    /// like [`Self::params`].
    fn vjp(&self, a: &Activations<T>, seed: &[Complex<T>], grad: &mut [Complex<T>]) {
        let z = Complex::new(T::zero(), T::zero());
        grad.iter_mut().for_each(|g| *g = z);
        let mut slices = Vec::with_capacity(self.layers.len());
        let mut rest = grad;
        for layer in &self.layers {
            let (w, tail) = rest.split_at_mut(layer.weights.len());
            let (b, tail) = tail.split_at_mut(layer.bias.len());
            slices.push((w, b));
            rest = tail;
        }

        let mut delta = seed.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &a.acts[l];
            let (gw, gb) = &mut slices[l];
            let mut delta_in = if l > 0 { Some(vec![z; input.len()]) } else { None };
            let of = layer.out_features;
            for site in 0..self.n {
                let d = &delta[site * of..(site + 1) * of];
                if d.iter().all(|v| v.re == T::zero() && v.im == T::zero()) {
                    continue;
                }
                layer.backward_site(site, input, d, gw, gb, delta_in.as_deref_mut());
            }
            if let Some(mut din) = delta_in {
                // through tanh of the previous hidden layer
                for (dx, &h) in din.iter_mut().zip(input.iter()) {
                    *dx *= Complex::new(T::one(), T::zero()) - h * h;
                }
                delta = din;
            }
        }
    }

    fn params(&self) -> impl Iterator<Item = &Complex<T>> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut Complex<T>> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }
}

/// Autoregressive ansatz. Parameter slots: for [`ArVariant::Joint`], each
/// complex parameter as `(re, im)` in layer order (weights then biases); for
/// [`ArVariant::Split`], the modulus network's real parameters followed by the
/// phase network's.
#[derive(Clone, Debug, PartialEq)]
pub struct ArModel<T> {
    variant: ArVariant,
    n_layers: usize,
    features: usize,
    nets: Vec<MaskedNet<T>>,
}

impl<T: Real> ArModel<T> {
    /// All-zero model over `n` spins with `n_layers` hidden layers of
    /// `features` units per site.
    pub fn zeros(n: usize, n_layers: usize, features: usize, variant: ArVariant) -> Self {
        let count = match variant {
            ArVariant::Joint => 1,
            ArVariant::Split => 2,
        };
        Self {
            variant,
            n_layers,
            features,
            nets: (0..count).map(|_| MaskedNet::new(n, n_layers, features)).collect(),
        }
    }

    pub fn variant(&self) -> ArVariant {
        self.variant
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn features(&self) -> usize {
        self.features
    }

    fn n(&self) -> usize {
        self.nets[0].n
    }

    /// `log η` at `site` from computed outputs.
    fn log_eta(&self, outs: &[&[Complex<T>]], site: usize) -> [Complex<T>; 2] {
        let k0 = 2 * site;
        match self.variant {
            ArVariant::Joint => {
                let o = outs[0];
                let norm = cnorm_sqr(o[k0]) + cnorm_sqr(o[k0 + 1]);
                let half_ln = T::lit(0.5) * norm.ln();
                [cln(o[k0]) - half_ln, cln(o[k0 + 1]) - half_ln]
            }
            ArVariant::Split => {
                let (m, p) = (outs[0], outs[1]);
                let (m0, m1) = (m[k0].re, m[k0 + 1].re);
                let top = m0.max(m1);
                let lse = top + ((m0 - top).exp() + (m1 - top).exp()).ln();
                let half = T::lit(0.5);
                [
                    Complex::new(half * (m0 - lse), p[k0].re),
                    Complex::new(half * (m1 - lse), p[k0 + 1].re),
                ]
            }
        }
    }

    /// Normalized conditional amplitudes `(η₊, η₋)` of spin `prefix.len()`
    /// given the preceding spins.
    pub fn conditionals(&self, prefix: &[i8]) -> [Complex<T>; 2] {
        let site = prefix.len();
        assert!(site < self.n(), "prefix must be shorter than the chain");
        let acts: Vec<Activations<T>> = self
            .nets
            .iter()
            .map(|net| {
                let mut a = net.empty_activations();
                for (x, &s) in a.acts[0].iter_mut().zip(prefix) {
                    *x = Complex::new(T::lit(f64::from(s)), T::zero());
                }
                for i in 0..=site {
                    net.forward_site(i, &mut a);
                }
                a
            })
            .collect();
        let outs: Vec<&[Complex<T>]> = acts.iter().map(|a| a.outputs.as_slice()).collect();
        let [l0, l1] = self.log_eta(&outs, site);
        [crate::scalar::cexp(l0), crate::scalar::cexp(l1)]
    }

    /// Draws one configuration by ancestral sampling, using `uniform()` for the
    /// per-site coin flips (values in `[0, 1)`).
    #[allow(clippy::needless_range_loop)]
    pub fn sample_with(&self, mut uniform: impl FnMut() -> f64, out: &mut [i8]) -> Complex<T> {
        let mut acts: Vec<Activations<T>> = self.nets.iter().map(|n| n.empty_activations()).collect();
        let mut log_psi = Complex::new(T::zero(), T::zero());
        for site in 0..self.n() {
            for (net, a) in self.nets.iter().zip(acts.iter_mut()) {
                net.forward_site(site, a);
            }
            let outs: Vec<&[Complex<T>]> = acts.iter().map(|a| a.outputs.as_slice()).collect();
            let le = self.log_eta(&outs, site);
            let p_up = (le[0].re + le[0].re).exp().as_f64();
            let s: i8 = if uniform() < p_up { 1 } else { -1 };
            out[site] = s;
            log_psi += if s > 0 { le[0] } else { le[1] };
            let x = Complex::new(T::lit(f64::from(s)), T::zero());
            for a in acts.iter_mut() {
                a.acts[0][site] = x;
            }
        }
        log_psi
    }
}

impl<T: Real> Wavefunction<T> for ArModel<T> {
    fn n_spins(&self) -> usize {
        self.n()
    }

    fn n_params(&self) -> usize {
        match self.variant {
            ArVariant::Joint => 2 * self.nets[0].n_params(),
            ArVariant::Split => self.nets.iter().map(MaskedNet::n_params).sum(),
        }
    }

    fn log_psi(&self, spins: &[i8]) -> Complex<T> {
        let acts: Vec<Activations<T>> = self.nets.iter().map(|n| n.forward(spins)).collect();
        let outs: Vec<&[Complex<T>]> = acts.iter().map(|a| a.outputs.as_slice()).collect();
        let mut total = Complex::new(T::zero(), T::zero());
        for (site, &s) in spins.iter().enumerate() {
            let le = self.log_eta(&outs, site);
            total += if s > 0 { le[0] } else { le[1] };
        }
        total
    }

    fn log_derivatives(&self, spins: &[i8], out: &mut [Complex<T>]) {
        let n = self.n();
        let zero = Complex::new(T::zero(), T::zero());
        match self.variant {
            ArVariant::Joint => {
                let net = &self.nets[0];
                let a = net.forward(spins);
                let o = &a.outputs;
                // log Ψ = Σ log o_{s} − ½ log(o₊ō₊ + o₋ō₋): holomorphic seed
                // `e` and the Wirtinger seed `c` of the normalization.
                let mut e = vec![zero; 2 * n];
                let mut c = vec![zero; 2 * n];
                for (site, &s) in spins.iter().enumerate() {
                    let k = 2 * site + usize::from(s < 0);
                    e[k] = Complex::new(T::one(), T::zero()) / o[k];
                    let norm = cnorm_sqr(o[2 * site]) + cnorm_sqr(o[2 * site + 1]);
                    let f = T::lit(-0.5) / norm;
                    c[2 * site] = o[2 * site].conj() * f;
                    c[2 * site + 1] = o[2 * site + 1].conj() * f;
                }
                let np = net.n_params();
                let mut ge = vec![zero; np];
                let mut gc = vec![zero; np];
                net.vjp(&a, &e, &mut ge);
                net.vjp(&a, &c, &mut gc);
                let two = T::lit(2.0);
                let i = Complex::new(T::zero(), T::one());
                for k in 0..np {
                    out[2 * k] = ge[k] + Complex::new(two * gc[k].re, T::zero());
                    out[2 * k + 1] = ge[k] * i - Complex::new(two * gc[k].im, T::zero());
                }
            }
            ArVariant::Split => {
                let (mnet, pnet) = (&self.nets[0], &self.nets[1]);
                let am = mnet.forward(spins);
                let ap = pnet.forward(spins);
                let mut sm = vec![zero; 2 * n];
                let mut sp = vec![zero; 2 * n];
                let half = T::lit(0.5);
                for (site, &s) in spins.iter().enumerate() {
                    let (m0, m1) = (am.outputs[2 * site].re, am.outputs[2 * site + 1].re);
                    let top = m0.max(m1);
                    let (e0, e1) = ((m0 - top).exp(), (m1 - top).exp());
                    let p0 = e0 / (e0 + e1);
                    let chosen = usize::from(s < 0);
                    let probs = [p0, T::one() - p0];
                    for k in 0..2 {
                        let ind = if k == chosen { T::one() } else { T::zero() };
                        sm[2 * site + k] = Complex::new(half * (ind - probs[k]), T::zero());
                    }
                    sp[2 * site + chosen] = Complex::new(T::one(), T::zero());
                }
                let (nm, npp) = (mnet.n_params(), pnet.n_params());
                let mut gm = vec![zero; nm];
                let mut gp = vec![zero; npp];
                mnet.vjp(&am, &sm, &mut gm);
                pnet.vjp(&ap, &sp, &mut gp);
                for (o, g) in out[..nm].iter_mut().zip(&gm) {
                    *o = Complex::new(g.re, T::zero());
                }
                for (o, g) in out[nm..].iter_mut().zip(&gp) {
                    *o = Complex::new(T::zero(), g.re);
                }
            }
        }
    }

    fn parameters(&self) -> Vec<T> {
        match self.variant {
            ArVariant::Joint => self.nets[0].params().flat_map(|c| [c.re, c.im]).collect(),
            ArVariant::Split => self.nets.iter().flat_map(|n| n.params().map(|c| c.re)).collect(),
        }
    }

    fn set_parameters(&mut self, params: &[T]) -> Result<()> {
        check_len(params.len(), self.n_params())?;
        match self.variant {
            ArVariant::Joint => {
                for (dst, p) in self.nets[0].params_mut().zip(params.chunks_exact(2)) {
                    *dst = Complex::new(p[0], p[1]);
                }
            }
            ArVariant::Split => {
                let mut it = params.iter();
                for net in self.nets.iter_mut() {
                    for dst in net.params_mut() {
                        *dst = Complex::new(*it.next().expect("length checked"), T::zero());
                    }
                }
            }
        }
        Ok(())
    }
}
