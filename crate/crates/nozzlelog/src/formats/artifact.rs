//! Versioned plain-text artifacts for fitted pipelines and models.
//!
//! Floats are written in their shortest round-trip form, so reading an
//! artifact back yields bit-identical parameters.

use std::fmt::Write as _;
use std::path::Path;

use nozzlelog_core::classifiers::ovr::MulticlassModel;
use nozzlelog_core::classifiers::tree::Node;
use nozzlelog_core::classifiers::{
    BaseModel, BinaryModel, Classifier, DecisionTree, Forest, Knn, LogReg, ModelSpec, OvrModel,
};
use nozzlelog_core::matrix::Matrix;
use nozzlelog_core::pipeline::{FittedPipeline, ImputeScale};
use nozzlelog_core::Class;

use super::matrix::format_f64;
use crate::error::{CliError, Result};

pub const PIPELINE_MAGIC: &str = "nozzlelog-pipeline 1";
pub const MODEL_MAGIC: &str = "nozzlelog-model 1";

pub fn render_pipeline(p: &FittedPipeline) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{PIPELINE_MAGIC}");
    let _ = writeln!(out, "seed {}", p.seed);
    let _ = writeln!(out, "catalog {}", p.catalog_digest);
    let _ = writeln!(out, "strength {}", format_f64(p.strength));
    let _ = writeln!(out, "fallback {}", p.used_fallback);
    let _ = writeln!(out, "columns {}", p.columns.len());
    for (j, name) in p.columns.iter().enumerate() {
        let _ = writeln!(
            out,
            "{name}\t{}\t{}\t{}",
            format_f64(p.stats.impute[j]),
            format_f64(p.stats.mean[j]),
            format_f64(p.stats.scale[j])
        );
    }
    let sel: Vec<String> = p.selected.iter().map(|j| j.to_string()).collect();
    let _ = writeln!(out, "selected {} {}", sel.len(), sel.join(" "));
    out
}

fn write_tree(out: &mut String, t: &DecisionTree) {
    let _ = writeln!(out, "tree {} {} {}", t.n_features, t.n_classes, t.nodes.len());
    for n in &t.nodes {
        let feature = n.feature.map_or("-".to_string(), |f| f.to_string());
        let counts: Vec<String> = n.counts.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            out,
            "{feature} {} {} {} {} {}",
            format_f64(n.threshold),
            n.left,
            n.right,
            n.depth,
            counts.join(" ")
        );
    }
}

fn write_forest(out: &mut String, f: &Forest) {
    let _ = writeln!(out, "forest {} {}", f.seed, f.trees.len());
    for t in &f.trees {
        write_tree(out, t);
    }
}

fn write_knn(out: &mut String, k: &Knn) {
    let _ = writeln!(out, "knn {} {} {} {}", k.k, k.n_classes, k.x.rows(), k.x.cols());
    for i in 0..k.x.rows() {
        let row: Vec<String> = k.x.row(i).iter().map(|&v| format_f64(v)).collect();
        let _ = writeln!(out, "{} {}", k.y[i], row.join(" "));
    }
}

fn floats(v: &[f64]) -> String {
    v.iter().map(|&x| format_f64(x)).collect::<Vec<_>>().join(" ")
}

fn write_binary(out: &mut String, m: &BinaryModel) {
    match m {
        BinaryModel::Tree(t) => write_tree(out, t),
        BinaryModel::Forest(f) => write_forest(out, f),
        BinaryModel::Knn(k) => write_knn(out, k),
        BinaryModel::LogReg(l) => {
            let _ = writeln!(out, "logreg {} {}", l.weights.len(), l.loss_history.len());
            let _ = writeln!(out, "{}", floats(&l.weights));
            let _ = writeln!(out, "{}", format_f64(l.bias));
            let _ = writeln!(out, "{}", floats(&l.loss_history));
        }
        BinaryModel::Constant(c) => {
            let _ = writeln!(out, "constant {}", format_f64(*c));
        }
    }
}

fn write_scorers(out: &mut String, m: &OvrModel) {
    for (c, s) in Class::ALL.iter().zip(&m.scorers) {
        let _ = writeln!(out, "class {c}");
        write_binary(out, s);
    }
}

pub fn render_model(spec: &ModelSpec, n_features: usize, model: &Classifier) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC}");
    let _ = writeln!(out, "spec {spec}");
    let _ = writeln!(out, "features {n_features}");
    match model {
        Classifier::Ovr(m) => {
            let _ = writeln!(out, "layout ovr");
            write_scorers(&mut out, m);
        }
        Classifier::Multiclass(MulticlassModel::Scores(m)) => {
            let _ = writeln!(out, "layout argmax");
            write_scorers(&mut out, m);
        }
        Classifier::Multiclass(m) => {
            let _ = writeln!(out, "layout multiclass");
            match m {
                MulticlassModel::Tree(t) => write_tree(&mut out, t),
                MulticlassModel::Forest(f) => write_forest(&mut out, f),
                MulticlassModel::Knn(k) => write_knn(&mut out, k),
                MulticlassModel::Scores(_) => unreachable!("handled above"),
            }
        }
    }
    out
}

/// Line cursor with error positions.
struct Lines<'a> {
    path: &'a Path,
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        Lines {
            path,
            lines: text.lines().collect(),
            pos: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> CliError {
        CliError::parse(self.path, self.pos.max(1), msg)
    }

    fn next(&mut self) -> Result<&'a str> {
        let line = *self
            .lines
            .get(self.pos)
            .ok_or_else(|| CliError::parse(self.path, self.pos + 1, "unexpected end of file"))?;
        self.pos += 1;
        Ok(line)
    }

    /// Next line, which must start with `key`; returns the remaining words.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self.next()?;
        let mut words = line.split_whitespace();
        if words.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(words.collect())
    }

    fn scalar<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let words = self.keyed(key)?;
        self.num(words.first())
    }

    fn num<T: std::str::FromStr>(&self, word: Option<&&str>) -> Result<T> {
        let w = word.ok_or_else(|| self.err("missing value"))?;
        w.parse().map_err(|_| self.err(format!("invalid value `{w}`")))
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let line = self.next()?;
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|w| w.parse().map_err(|_| self.err(format!("invalid number `{w}`"))))
            .collect::<Result<_>>()?;
        if v.len() != n {
            return Err(self.err(format!("expected {n} numbers, found {}", v.len())));
        }
        Ok(v)
    }

    fn done(&self) -> Result<()> {
        match self.lines[self.pos..].iter().position(|l| !l.trim().is_empty()) {
            Some(i) => Err(CliError::parse(self.path, self.pos + i + 1, "trailing content")),
            None => Ok(()),
        }
    }
}

pub fn parse_pipeline(path: &Path, text: &str) -> Result<FittedPipeline> {
    let mut l = Lines::new(path, text);
    if l.next()? != PIPELINE_MAGIC {
        return Err(l.err("not a pipeline artifact"));
    }
    let seed = l.scalar("seed")?;
    let catalog = l.keyed("catalog")?.first().map(|s| s.to_string()).unwrap_or_default();
    let strength = l.scalar("strength")?;
    let used_fallback = l.scalar("fallback")?;
    let n: usize = l.scalar("columns")?;
    let mut columns = Vec::with_capacity(n);
    let (mut impute, mut mean, mut scale) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let line = l.next()?;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(l.err("expected `name<TAB>impute<TAB>mean<TAB>scale`"));
        }
        columns.push(f[0].to_string());
        impute.push(l.num(f.get(1))?);
        mean.push(l.num(f.get(2))?);
        scale.push(l.num(f.get(3))?);
    }
    let sel = l.keyed("selected")?;
    let k: usize = l.num(sel.first())?;
    let selected: Vec<usize> = (1..=k).map(|i| l.num(sel.get(i))).collect::<Result<_>>()?;
    if sel.len() != k + 1 || selected.iter().any(|&j| j >= n) {
        return Err(l.err("invalid selected column list"));
    }
    l.done()?;
    Ok(FittedPipeline {
        columns,
        stats: ImputeScale { impute, mean, scale },
        selected,
        used_fallback,
        seed,
        catalog_digest: catalog,
        strength,
    })
}

fn read_tree(l: &mut Lines) -> Result<DecisionTree> {
    let h = l.keyed("tree")?;
    let n_features = l.num(h.first())?;
    let n_classes: usize = l.num(h.get(1))?;
    let n_nodes: usize = l.num(h.get(2))?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let line = l.next()?;
        let w: Vec<&str> = line.split_whitespace().collect();
        if w.len() != 5 + n_classes {
            return Err(l.err("malformed tree node"));
        }
        let feature = if w[0] == "-" { None } else { Some(l.num(w.first())?) };
        let counts = (5..w.len()).map(|i| l.num(w.get(i))).collect::<Result<_>>()?;
        let node = Node {
            feature,
            threshold: l.num(w.get(1))?,
            left: l.num(w.get(2))?,
            right: l.num(w.get(3))?,
            depth: l.num(w.get(4))?,
            counts,
        };
        if node.feature.is_some() && (node.left >= n_nodes || node.right >= n_nodes) {
            return Err(l.err("child index out of range"));
        }
        nodes.push(node);
    }
    if nodes.is_empty() {
        return Err(l.err("tree without nodes"));
    }
    Ok(DecisionTree {
        n_features,
        n_classes,
        nodes,
    })
}

fn read_forest(l: &mut Lines, spec: &ModelSpec) -> Result<Forest> {
    let h = l.keyed("forest")?;
    let seed = l.num(h.first())?;
    let n: usize = l.num(h.get(1))?;
    let BaseModel::Forest(params) = spec.base else {
        return Err(l.err("forest block for a non-forest model"));
    };
    let trees = (0..n).map(|_| read_tree(l)).collect::<Result<_>>()?;
    Ok(Forest { params, seed, trees })
}

fn read_knn(l: &mut Lines) -> Result<Knn> {
    let h = l.keyed("knn")?;
    let k = l.num(h.first())?;
    let n_classes = l.num(h.get(1))?;
    let rows: usize = l.num(h.get(2))?;
    let cols: usize = l.num(h.get(3))?;
    let mut y = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let line = l.next()?;
        let w: Vec<&str> = line.split_whitespace().collect();
        if w.len() != cols + 1 {
            return Err(l.err("malformed neighbour row"));
        }
        y.push(l.num(w.first())?);
        for i in 1..=cols {
            data.push(l.num(w.get(i))?);
        }
    }
    Ok(Knn {
        k,
        n_classes,
        x: Matrix::new(rows, cols, data)?,
        y,
    })
}

fn read_binary(l: &mut Lines, spec: &ModelSpec) -> Result<BinaryModel> {
    let kind = l
        .lines
        .get(l.pos)
        .and_then(|s| s.split_whitespace().next())
        .unwrap_or("");
    Ok(match kind {
        "tree" => BinaryModel::Tree(read_tree(l)?),
        "forest" => BinaryModel::Forest(read_forest(l, spec)?),
        "knn" => BinaryModel::Knn(read_knn(l)?),
        "logreg" => {
            let h = l.keyed("logreg")?;
            let n = l.num(h.first())?;
            let hist = l.num(h.get(1))?;
            let weights = l.floats(n)?;
            let bias = l.floats(1)?[0];
            let loss_history = l.floats(hist)?;
            BinaryModel::LogReg(LogReg {
                weights,
                bias,
                loss_history,
            })
        }
        "constant" => BinaryModel::Constant(l.scalar("constant")?),
        other => return Err(CliError::parse(l.path, l.pos + 1, format!("unknown scorer `{other}`"))),
    })
}

fn read_scorers(l: &mut Lines, spec: &ModelSpec) -> Result<OvrModel> {
    let mut scorers = Vec::with_capacity(Class::COUNT);
    for c in Class::ALL {
        let h = l.keyed("class")?;
        if h.first() != Some(&c.name()) {
            return Err(l.err(format!("expected scorer for {c}")));
        }
        scorers.push(read_binary(l, spec)?);
    }
    Ok(OvrModel {
        base: spec.base,
        scorers,
    })
}

/// Returns the model spec, the input width and the fitted model.
pub fn parse_model(path: &Path, text: &str) -> Result<(ModelSpec, usize, Classifier)> {
    let mut l = Lines::new(path, text);
    if l.next()? != MODEL_MAGIC {
        return Err(l.err("not a model artifact"));
    }
    let line = l.next()?;
    let spec: ModelSpec = line
        .strip_prefix("spec ")
        .ok_or_else(|| l.err("expected `spec`"))?
        .parse()
        .map_err(|e: nozzlelog_core::Error| l.err(e.to_string()))?;
    let n_features = l.scalar("features")?;
    let layout = l.keyed("layout")?;
    let model = match layout.first().copied() {
        Some("ovr") => Classifier::Ovr(read_scorers(&mut l, &spec)?),
        Some("argmax") => Classifier::Multiclass(MulticlassModel::Scores(read_scorers(&mut l, &spec)?)),
        Some("multiclass") => {
            let kind = l.lines.get(l.pos).and_then(|s| s.split_whitespace().next());
            Classifier::Multiclass(match kind {
                Some("tree") => MulticlassModel::Tree(read_tree(&mut l)?),
                Some("forest") => MulticlassModel::Forest(read_forest(&mut l, &spec)?),
                Some("knn") => MulticlassModel::Knn(read_knn(&mut l)?),
                _ => return Err(l.err("unknown multi-class model")),
            })
        }
        _ => return Err(l.err("unknown layout")),
    };
    l.done()?;
    Ok((spec, n_features, model))
}

pub fn read_pipeline(path: &Path) -> Result<FittedPipeline> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_pipeline(path, &text)
}

pub fn read_model(path: &Path) -> Result<(ModelSpec, usize, Classifier)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_model(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nozzlelog_core::LabelSet;

    fn data() -> (Matrix, Vec<LabelSet>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..36 {
            let c = i % 6;
            rows.push(vec![c as f64 + 0.1 * (i % 4) as f64, ((i * 5) % 7) as f64, f64::from(i as u32) / 3.0]);
            labels.push(LabelSet::single(Class::ALL[c]));
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn models_round_trip() {
        let (x, y) = data();
        for name in ["ovr-rf", "rf", "ovr-dt", "dt", "ovr-knn", "knn", "ovr-logreg", "logreg", "ovr-et"] {
            let spec: ModelSpec = name.parse().unwrap();
            let (m, _) = Classifier::fit(&spec, &x, &y, 3, true).unwrap();
            let text = render_model(&spec, 3, &m);
            let (spec2, width, back) = parse_model(Path::new("m"), &text).unwrap();
            assert_eq!(spec2, spec, "{name}");
            assert_eq!(width, 3);
            assert_eq!(back, m, "{name}");
            assert_eq!(render_model(&spec2, width, &back), text);
        }
    }

    #[test]
    fn truncated_model_is_a_parse_error() {
        let (x, y) = data();
        let spec: ModelSpec = "ovr-dt".parse().unwrap();
        let (m, _) = Classifier::fit(&spec, &x, &y, 3, true).unwrap();
        let text = render_model(&spec, 3, &m);
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_model(Path::new("m"), &cut), Err(CliError::Parse { .. })));
        assert!(parse_model(Path::new("m"), "garbage\n").is_err());
    }
}
