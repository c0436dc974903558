//! Leave-one-out evaluation and object-subset sweeps.

use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{orientation_error, translation_error};
use crate::bscale::BScaleSettings;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::recognition::{check_placement_disjoint, recognize_from_structure};
use crate::scalar::Real;
use crate::training::{
    intensity_structure, landmark_with_config, object_structure, train_assembly, IntensityStructure,
    LabelledSubject, ObjectStructure, TrainingSubject,
};
use crate::volume::BinaryMask;

/// Per-subject work that does not depend on the object subset: the
/// intensity structure (one b-scale pass) and the landmarks of every object.
#[derive(Debug, Clone)]
pub struct PreparedSubject<T: Real> {
    pub id: String,
    pub intensity: IntensityStructure<T>,
    /// In the order of [`PreparedDataset::labels`].
    pub landmarks: Vec<Vec<Vector3<T>>>,
    pub masks: Vec<BinaryMask<T>>,
}

#[derive(Debug, Clone)]
pub struct PreparedDataset<T: Real> {
    pub labels: Vec<String>,
    pub spacing: [T; 3],
    pub config: Config,
    pub subjects: Vec<PreparedSubject<T>>,
}

pub fn prepare_dataset<T: Real>(
    subjects: &[LabelledSubject<T>],
    labels: &[String],
    cfg: &Config,
) -> Result<PreparedDataset<T>> {
    cfg.validate()?;
    let first = subjects.first().ok_or_else(|| Error::param("subjects", "empty dataset"))?;
    let settings = BScaleSettings::from_config(cfg);
    let prepared = subjects
        .iter()
        .map(|s| {
            let masks = labels
                .iter()
                .map(|l| s.mask(l).cloned())
                .collect::<Result<Vec<_>>>()?;
            let landmarks = labels
                .iter()
                .zip(&masks)
                .map(|(l, m)| landmark_with_config(m, l, cfg))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::RecognitionFailed(format!("landmarking subject `{}`: {e}", s.id)))?;
            let (intensity, _) = intensity_structure(&s.scene, &settings)?;
            Ok(PreparedSubject {
                id: s.id.clone(),
                intensity,
                landmarks,
                masks,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedDataset {
        labels: labels.to_vec(),
        spacing: first.scene.spacing(),
        config: cfg.clone(),
        subjects: prepared,
    })
}

/// One held-out subject's errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub subject: String,
    pub subset: String,
    pub t_err_mm: f64,
    pub rot_x_deg: f64,
    pub rot_y_deg: f64,
    pub rot_z_deg: f64,
    pub scale_ratio: f64,
    pub gimbal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> MeanStd {
    let n = xs.clone().count();
    if n == 0 {
        return MeanStd::default();
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    MeanStd { mean, std: var.sqrt() }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub subset: String,
    pub folds: usize,
    pub t_err_mm: MeanStd,
    pub rot_deg: [MeanStd; 3],
    pub scale_ratio: MeanStd,
}

pub fn summarize(subset: &str, records: &[EvalRecord]) -> Summary {
    Summary {
        subset: subset.to_string(),
        folds: records.len(),
        t_err_mm: mean_std(records.iter().map(|r| r.t_err_mm)),
        rot_deg: [
            mean_std(records.iter().map(|r| r.rot_x_deg)),
            mean_std(records.iter().map(|r| r.rot_y_deg)),
            mean_std(records.iter().map(|r| r.rot_z_deg)),
        ],
        scale_ratio: mean_std(records.iter().map(|r| r.scale_ratio)),
    }
}

pub fn subset_name(labels: &[&str]) -> String {
    labels.join("+")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoocvReport {
    pub records: Vec<EvalRecord>,
    pub summary: Summary,
}

/// Leave-one-out over the prepared subjects for one object subset.
///
/// Folds run in parallel; records come back in subject order. When
/// `check_placement` is set, every placed assembly is voxelized and must
/// be pairwise disjoint.
pub fn loocv<T: Real>(data: &PreparedDataset<T>, subset: &[&str], check_placement: bool) -> Result<LoocvReport> {
    let n = data.subjects.len();
    if n < 3 {
        return Err(Error::param("subjects", format!("leave-one-out needs at least 3 subjects, got {n}")));
    }
    if subset.is_empty() {
        return Err(Error::param("objects", "empty object subset"));
    }
    let cols = subset
        .iter()
        .map(|l| {
            data.labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::param("objects", format!("unknown object `{l}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let name = subset_name(subset);
    let shapes: Vec<Vec<&[Vector3<T>]>> = data
        .subjects
        .iter()
        .map(|s| cols.iter().map(|&c| s.landmarks[c].as_slice()).collect())
        .collect();
    let truths: Vec<ObjectStructure<T>> = data
        .subjects
        .iter()
        .map(|s| object_structure(cols.iter().map(|&c| &s.masks[c])))
        .collect::<Result<_>>()?;

    let records = (0..n)
        .into_par_iter()
        .map(|held| {
            let fold = |e: Error| Error::Fold {
                fold: held,
                source: Box::new(e),
            };
            let training: Vec<TrainingSubject<'_, T>> = (0..n)
                .filter(|&i| i != held)
                .map(|i| TrainingSubject {
                    shapes: &shapes[i],
                    objects: &truths[i],
                    intensity: &data.subjects[i].intensity,
                })
                .collect();
            let assembly = train_assembly(subset, &training, &data.config, data.spacing).map_err(fold)?;
            let test = &data.subjects[held];
            let result = recognize_from_structure(&assembly, &test.intensity).map_err(fold)?;
            if check_placement {
                check_placement_disjoint(&assembly, &result.placed).map_err(fold)?;
            }
            let truth = &truths[held];
            let o = orientation_error(&result.predicted_axes, &truth.pc.axes);
            Ok(EvalRecord {
                subject: test.id.clone(),
                subset: name.clone(),
                t_err_mm: translation_error(&result.predicted_origin, &truth.pc.origin).as_f64(),
                rot_x_deg: o.degrees[0].as_f64(),
                rot_y_deg: o.degrees[1].as_f64(),
                rot_z_deg: o.degrees[2].as_f64(),
                scale_ratio: result.pose.s.as_f64(),
                gimbal: o.gimbal,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&name, &records);
    Ok(LoocvReport { records, summary })
}

/// Every non-empty subset of `labels`, ordered by size then by position.
pub fn all_subsets(labels: &[String]) -> Vec<Vec<&str>> {
    let m = labels.len();
    let mut out: Vec<Vec<&str>> = (1u64..(1u64 << m))
        .map(|bits| {
            (0..m)
                .filter(|i| bits >> i & 1 == 1)
                .map(|i| labels[i].as_str())
                .collect()
        })
        .collect();
    out.sort_by_key(|s| s.len());
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// One report per subset, in [`all_subsets`] order.
    pub reports: Vec<LoocvReport>,
}

impl SweepReport {
    /// Summaries sorted by mean translation error, best first.
    pub fn ranked(&self) -> Vec<&Summary> {
        let mut s: Vec<&Summary> = self.reports.iter().map(|r| &r.summary).collect();
        s.sort_by(|a, b| a.t_err_mm.mean.total_cmp(&b.t_err_mm.mean));
        s
    }

    pub fn summary(&self, subset: &str) -> Option<&Summary> {
        self.reports.iter().map(|r| &r.summary).find(|s| s.subset == subset)
    }
}

/// Leave-one-out for every non-empty object subset.
pub fn combination_sweep<T: Real>(data: &PreparedDataset<T>, check_placement: bool) -> Result<SweepReport> {
    let reports = all_subsets(&data.labels)
        .iter()
        .map(|s| loocv(data, s, check_placement))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport { reports })
}

/// Writes records as CSV preceded by a `# config: {…}` comment line.
pub fn write_records_csv(out: impl Write, config: &Config, records: &[EvalRecord]) -> Result<()> {
    let mut out = out;
    writeln!(out, "# config: {}", config.to_json()).map_err(|e| Error::io("<csv>", e))?;
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_summary_csv(out: impl Write, config: &Config, summaries: &[&Summary]) -> Result<()> {
    let mut out = out;
    writeln!(out, "# config: {}", config.to_json()).map_err(|e| Error::io("<csv>", e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "subset",
        "folds",
        "t_err_mm_mean",
        "t_err_mm_std",
        "rot_x_deg_mean",
        "rot_y_deg_mean",
        "rot_z_deg_mean",
        "scale_ratio_mean",
        "scale_ratio_std",
    ])?;
    for s in summaries {
        w.write_record([
            s.subset.clone(),
            s.folds.to_string(),
            s.t_err_mm.mean.to_string(),
            s.t_err_mm.std.to_string(),
            s.rot_deg[0].mean.to_string(),
            s.rot_deg[1].mean.to_string(),
            s.rot_deg[2].mean.to_string(),
            s.scale_ratio.mean.to_string(),
            s.scale_ratio.std.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn save_records_csv(path: impl AsRef<Path>, config: &Config, records: &[EvalRecord]) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_records_csv(std::io::BufWriter::new(f), config, records)
}

/// Parses a file written by [`write_records_csv`], skipping comment lines.
pub fn read_records_csv(path: impl AsRef<Path>) -> Result<Vec<EvalRecord>> {
    let path = path.as_ref();
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_of_five() {
        let labels: Vec<String> = ["a", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
        let s = all_subsets(&labels);
        assert_eq!(s.len(), 31);
        assert_eq!(s[0], vec!["a"]);
        assert_eq!(s[30].len(), 5);
    }

    #[test]
    fn mean_std_basic() {
        let m = mean_std([1.0, 3.0].into_iter());
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.std, 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let rec = EvalRecord {
            subject: "subject_001".into(),
            subset: "liver+spleen".into(),
            t_err_mm: 1.25,
            rot_x_deg: 0.5,
            rot_y_deg: 0.0,
            rot_z_deg: 2.0,
            scale_ratio: 1.01,
            gimbal: false,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        save_records_csv(&p, &Config::default(), std::slice::from_ref(&rec)).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# config: {"));
        assert!(text.lines().nth(1).unwrap().starts_with("subject,subset,t_err_mm,rot_x_deg,rot_y_deg,rot_z_deg,scale_ratio"));
        assert_eq!(read_records_csv(&p).unwrap(), vec![rec]);
    }
}
