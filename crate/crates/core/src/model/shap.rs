use rayon::prelude::*;

use super::gbt::{GbtModel, Node, Tree};
use super::ModelError;

/// Largest background sample used for attribution.
pub const MAX_BACKGROUND: usize = 100;

/// Per-instance feature attributions (rows = instances).
#[derive(Debug, Clone, PartialEq)]
pub struct ShapMatrix {
    pub values: Vec<Vec<f64>>,
    /// Mean model output over the background rows.
    pub base_value: f64,
}

/// Up to `max` row indices spread uniformly over `0..n`.
pub fn background_rows(n: usize, max: usize) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    (0..max).map(|k| k * n / max).collect()
}

/// Interventional Shapley values for a tree ensemble.
///
/// The value of a coalition S for instance x is the mean over background rows
/// z of the model evaluated at x on S and z elsewhere. For each (tree, z) pair
/// the Shapley values are computed exactly by enumerating the root-to-leaf
/// paths that x and z can jointly reach: where they disagree at a split the
/// walk branches, crediting the feature to x's side or z's side. A leaf
/// reached with a features on x's side and b on z's side is a unanimity game,
/// whose Shapley values have closed form. Background beyond
/// [`MAX_BACKGROUND`] rows is thinned uniformly. Rows are row-major and may
/// contain NaN, which is imputed as in prediction.
pub fn tree_shap(
    model: &GbtModel,
    foreground: &[Vec<f64>],
    background: &[Vec<f64>],
) -> Result<ShapMatrix, ModelError> {
    let m = model.n_features();
    if background.is_empty() {
        return Err(ModelError::EmptyBackground);
    }
    for row in foreground.iter().chain(background) {
        if row.len() != m {
            return Err(ModelError::ShapeMismatch {
                expected: m,
                got: row.len(),
            });
        }
    }
    let impute = |r: &Vec<f64>| {
        let mut r = r.clone();
        model.impute_row(&mut r);
        r
    };
    let bg: Vec<Vec<f64>> = background_rows(background.len(), MAX_BACKGROUND)
        .into_iter()
        .map(|i| impute(&background[i]))
        .collect();
    let base_value = bg.iter().map(|z| model.predict_imputed(z)).sum::<f64>() / bg.len() as f64;

    let depth = model.trees.iter().map(|t| t.nodes.len()).max().unwrap_or(1);
    let weights = Weights::new(depth.min(170));

    let values = foreground
        .par_iter()
        .map(|row| {
            let x = impute(row);
            let mut phi = vec![0.0; m];
            let mut walker = Walker {
                x: &x,
                z: &[],
                side: vec![Side::Unseen; m],
                on_x: Vec::new(),
                on_z: Vec::new(),
                phi: &mut phi,
                weights: &weights,
            };
            for z in &bg {
                walker.z = z;
                for tree in &model.trees {
                    walker.walk(tree, 0);
                }
            }
            let scale = model.learning_rate / bg.len() as f64;
            phi.iter_mut().for_each(|v| *v *= scale);
            if cfg!(debug_assertions) {
                let fx = model.predict_imputed(&x);
                let gap = base_value + phi.iter().sum::<f64>() - fx;
                assert!(
                    gap.abs() <= 1e-6 * fx.abs().max(1.0),
                    "local accuracy gap {gap}"
                );
            }
            phi
        })
        .collect();
    Ok(ShapMatrix { values, base_value })
}

/// Shapley weights for unanimity games with a "present" and b "absent" players.
struct Weights {
    fact: Vec<f64>,
}

impl Weights {
    fn new(max: usize) -> Self {
        let mut fact = vec![1.0; max + 2];
        for i in 1..fact.len() {
            fact[i] = fact[i - 1] * i as f64;
        }
        Self { fact }
    }

    /// Shapley value of each required-present player.
    fn present(&self, a: usize, b: usize) -> f64 {
        self.fact[a - 1] * self.fact[b] / self.fact[a + b]
    }

    /// Shapley value of each required-absent player (negated in use).
    fn absent(&self, a: usize, b: usize) -> f64 {
        self.fact[a] * self.fact[b - 1] / self.fact[a + b]
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Unseen,
    X,
    Z,
}

struct Walker<'a> {
    x: &'a [f64],
    z: &'a [f64],
    side: Vec<Side>,
    on_x: Vec<usize>,
    on_z: Vec<usize>,
    phi: &'a mut [f64],
    weights: &'a Weights,
}

impl Walker<'_> {
    fn walk(&mut self, tree: &Tree, node: usize) {
        match tree.nodes[node] {
            Node::Leaf(v) => {
                let (a, b) = (self.on_x.len(), self.on_z.len());
                if a > 0 {
                    let w = v * self.weights.present(a, b);
                    for &i in &self.on_x {
                        self.phi[i] += w;
                    }
                }
                if b > 0 {
                    let w = v * self.weights.absent(a, b);
                    for &j in &self.on_z {
                        self.phi[j] -= w;
                    }
                }
            }
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let x_child = if self.x[feature] <= threshold {
                    left
                } else {
                    right
                };
                let z_child = if self.z[feature] <= threshold {
                    left
                } else {
                    right
                };
                match self.side[feature] {
                    Side::X => self.walk(tree, x_child),
                    Side::Z => self.walk(tree, z_child),
                    Side::Unseen if x_child == z_child => self.walk(tree, x_child),
                    Side::Unseen => {
                        self.side[feature] = Side::X;
                        self.on_x.push(feature);
                        self.walk(tree, x_child);
                        self.on_x.pop();

                        self.side[feature] = Side::Z;
                        self.on_z.push(feature);
                        self.walk(tree, z_child);
                        self.on_z.pop();
                        self.side[feature] = Side::Unseen;
                    }
                }
            }
        }
    }
}
