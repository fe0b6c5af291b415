use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::classifiers::{gini_importance, Classifier};
use crate::error::{Error, Result};
use crate::nozzle::Class;

/// Top features of one forest by mean impurity decrease.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceTable {
    /// `None` for a single multi-class forest.
    pub class: Option<Class>,
    /// `(feature name, importance)` in descending importance, ties by name.
    pub rows: Vec<(String, f64)>,
}

pub fn importance_report(
    model: &Classifier,
    model_name: &str,
    names: &[String],
    top_n: usize,
) -> Result<Vec<ImportanceTable>> {
    let forests = model.forests();
    if forests.is_empty() {
        return Err(Error::UnsupportedModel(format!(
            "{model_name} has no impurity-based importances"
        )));
    }
    let mut out = Vec::with_capacity(forests.len());
    for (class, forest) in forests {
        let imp = gini_importance(forest);
        if imp.len() != names.len() {
            return Err(Error::Schema(format!(
                "model has {} features but {} names were given",
                imp.len(),
                names.len()
            )));
        }
        let mut rows: Vec<(String, f64)> = names.iter().cloned().zip(imp).collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        rows.truncate(top_n);
        out.push(ImportanceTable { class, rows });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{BaseModel, ModelKind, ModelSpec};
    use crate::matrix::Matrix;
    use crate::nozzle::LabelSet;

    #[test]
    fn tables_sort_and_reject_non_forests() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let c = i % 3;
            rows.push(alloc::vec![c as f64, ((i * 7) % 5) as f64]);
            labels.push(LabelSet::single(Class::ALL[c]));
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let names = alloc::vec![String::from("signal"), String::from("noise")];
        let rf = ModelSpec::new(BaseModel::default_for(ModelKind::RandomForest), true);
        let (m, _) = Classifier::fit(&rf, &x, &labels, 4, true).unwrap();
        let tables = importance_report(&m, "rf", &names, 1).unwrap();
        // classes without training rows get constant scorers and no table
        assert_eq!(tables.len(), 3);
        assert_eq!(tables[0].rows[0].0, "signal");

        let knn = ModelSpec::new(BaseModel::default_for(ModelKind::Knn), true);
        let (m, _) = Classifier::fit(&knn, &x, &labels, 4, true).unwrap();
        assert!(matches!(
            importance_report(&m, "knn", &names, 5),
            Err(Error::UnsupportedModel(_))
        ));
    }
}
