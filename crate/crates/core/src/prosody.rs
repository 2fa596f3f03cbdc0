//! Pitch variation quotient, intonation classification and agreement with
//! perception-test marks.

use std::fmt;

use thiserror::Error;

use crate::pitch::PitchContour;

/// Boundary between monotone and dynamic delivery.
pub const DEFAULT_PVQ_THRESHOLD: f64 = 0.16;
/// Perception marks run 1..=3; 2 is the midpoint between monotone and dynamic.
pub const DEFAULT_MARK_BOUNDARY: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ProsodyError {
    #[error("need at least 2 voiced frames, got {0}")]
    InsufficientVoicedFrames(usize),
    #[error("no perception label for segment '{0}'")]
    MissingLabel(String),
    #[error("empty input")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Intonation {
    Monotone,
    Dynamic,
}

impl fmt::Display for Intonation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Intonation::Monotone => write!(f, "Monotone"),
            Intonation::Dynamic => write!(f, "Dynamic"),
        }
    }
}

/// Summary of one segment's voiced pitch distribution.
#[derive(Debug, Clone)]
pub struct PvqReport {
    pub mean_f0: f64,
    pub std_f0: f64,
    pub pvq: f64,
    pub voiced_fraction: f64,
    pub label: Intonation,
}

/// One segment's marks from the perception test, 1 = monotone .. 3 = dynamic.
#[derive(Debug, Clone)]
pub struct PerceptionRecord {
    pub segment_id: String,
    pub marks: Vec<u8>,
    pub average_mark: f64,
}

impl PerceptionRecord {
    pub fn new(segment_id: String, marks: Vec<u8>) -> Self {
        debug_assert!(!marks.is_empty());
        let average_mark = marks.iter().map(|&m| m as f64).sum::<f64>() / marks.len() as f64;
        PerceptionRecord {
            segment_id,
            marks,
            average_mark,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SegmentAgreement {
    pub segment_id: String,
    pub pvq: f64,
    pub average_mark: f64,
    pub agree: bool,
}

#[derive(Debug, Clone)]
pub struct AgreementReport {
    pub n_segments: usize,
    pub n_disagreements: usize,
    pub error_rate: f64,
    pub per_segment: Vec<SegmentAgreement>,
}

/// Mean and population standard deviation over voiced frames only; the
/// quotient is their ratio. Unvoiced frames are excluded entirely so pauses
/// do not inflate the variation measure.
pub fn compute_pvq(contour: &PitchContour) -> Result<PvqReport, ProsodyError> {
    compute_pvq_with(contour, DEFAULT_PVQ_THRESHOLD)
}

pub fn compute_pvq_with(
    contour: &PitchContour,
    threshold: f64,
) -> Result<PvqReport, ProsodyError> {
    let voiced: Vec<f64> = contour.voiced_f0().collect();
    if voiced.len() < 2 {
        return Err(ProsodyError::InsufficientVoicedFrames(voiced.len()));
    }
    let n = voiced.len() as f64;
    let mean = voiced.iter().sum::<f64>() / n;
    let var = voiced.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let pvq = std / mean;
    Ok(PvqReport {
        mean_f0: mean,
        std_f0: std,
        pvq,
        voiced_fraction: voiced.len() as f64 / contour.f0.len() as f64,
        label: classify_intonation(pvq, threshold),
    })
}

/// Quotient at or above the threshold counts as dynamic.
pub fn classify_intonation(pvq: f64, threshold: f64) -> Intonation {
    debug_assert!(pvq >= 0.0 && threshold > 0.0);
    if pvq >= threshold {
        Intonation::Dynamic
    } else {
        Intonation::Monotone
    }
}

/// Score machine PVQ verdicts against averaged human marks.
///
/// A segment disagrees when the quotient and the mark fall on opposite sides
/// of their boundaries (mark equal to the boundary counts as "high", quotient
/// equal to the boundary counts as dynamic).
pub fn evaluate_agreement(
    reports: &[(String, PvqReport)],
    labels: &[PerceptionRecord],
    pvq_boundary: f64,
    mark_boundary: f64,
) -> Result<AgreementReport, ProsodyError> {
    if reports.is_empty() {
        return Err(ProsodyError::EmptyInput);
    }
    let mut per_segment = Vec::with_capacity(reports.len());
    let mut n_disagreements = 0;
    for (id, report) in reports {
        let record = labels
            .iter()
            .find(|r| &r.segment_id == id)
            .ok_or_else(|| ProsodyError::MissingLabel(id.clone()))?;
        let high_pvq = report.pvq >= pvq_boundary;
        let high_mark = record.average_mark >= mark_boundary;
        let agree = high_pvq == high_mark;
        if !agree {
            n_disagreements += 1;
        }
        per_segment.push(SegmentAgreement {
            segment_id: id.clone(),
            pvq: report.pvq,
            average_mark: record.average_mark,
            agree,
        });
    }
    Ok(AgreementReport {
        n_segments: reports.len(),
        n_disagreements,
        error_rate: n_disagreements as f64 / reports.len() as f64,
        per_segment,
    })
}

/// Corpus-average quotient, usable as a data-driven boundary.
pub fn mean_pvq(reports: &[PvqReport]) -> Result<f64, ProsodyError> {
    if reports.is_empty() {
        return Err(ProsodyError::EmptyInput);
    }
    Ok(reports.iter().map(|r| r.pvq).sum::<f64>() / reports.len() as f64)
}

/// Plot-ready per-segment CSV. `marks` may be empty, leaving the
/// average_mark and agree columns blank.
pub fn export_segments_csv(
    rows: &[(String, PvqReport, Option<(f64, bool)>)],
) -> String {
    let mut out = String::from(
        "segment_id,pvq,mean_f0,std_f0,voiced_fraction,average_mark,label,agree\n",
    );
    for (id, r, verdict) in rows {
        let (mark, agree) = match verdict {
            Some((m, a)) => (format!("{m:.4}"), a.to_string()),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{id},{:.6},{:.4},{:.4},{:.4},{mark},{},{agree}\n",
            r.pvq, r.mean_f0, r.std_f0, r.voiced_fraction, r.label
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contour_of(f0: Vec<f64>) -> PitchContour {
        let voiced = f0.iter().map(|&f| f != 0.0).collect();
        PitchContour {
            f0,
            voiced,
            hop_ms: 7.5,
            sample_rate: 16000,
        }
    }

    #[test]
    fn constant_contour_has_zero_pvq() {
        let r = compute_pvq(&contour_of(vec![120.0; 40])).unwrap();
        assert_eq!(r.pvq, 0.0);
        assert_eq!(r.label, Intonation::Monotone);
        assert_eq!(r.mean_f0, 120.0);
    }

    #[test]
    fn pvq_direct_formula_oracle() {
        let r = compute_pvq(&contour_of(vec![100.0, 110.0, 90.0, 100.0])).unwrap();
        assert!((r.mean_f0 - 100.0).abs() < 1e-12);
        assert!((r.std_f0 - 50f64.sqrt()).abs() < 1e-12);
        assert!((r.pvq - 50f64.sqrt() / 100.0).abs() < 1e-12);
    }

    #[test]
    fn unvoiced_frames_are_excluded() {
        let r = compute_pvq(&contour_of(vec![100.0, 0.0, 100.0, 0.0, 100.0])).unwrap();
        assert_eq!(r.pvq, 0.0);
        assert!((r.voiced_fraction - 0.6).abs() < 1e-12);
    }

    #[test]
    fn too_few_voiced_frames() {
        assert!(matches!(
            compute_pvq(&contour_of(vec![100.0, 0.0, 0.0])),
            Err(ProsodyError::InsufficientVoicedFrames(1))
        ));
    }

    #[test]
    fn threshold_classifications() {
        assert_eq!(classify_intonation(0.092, 0.16), Intonation::Monotone);
        assert_eq!(classify_intonation(0.179, 0.16), Intonation::Dynamic);
        // boundary convention: equality maps to Dynamic
        assert_eq!(classify_intonation(0.16, 0.16), Intonation::Dynamic);
    }

    fn report(pvq: f64) -> PvqReport {
        PvqReport {
            mean_f0: 100.0,
            std_f0: pvq * 100.0,
            pvq,
            voiced_fraction: 1.0,
            label: classify_intonation(pvq, DEFAULT_PVQ_THRESHOLD),
        }
    }

    #[test]
    fn four_segment_agreement_enumeration() {
        let reports: Vec<(String, PvqReport)> = [0.05, 0.30, 0.20, 0.10]
            .iter()
            .enumerate()
            .map(|(i, &p)| (format!("s{i}"), report(p)))
            .collect();
        let labels: Vec<PerceptionRecord> = [2.5, 1.5, 2.5, 1.5]
            .iter()
            .enumerate()
            .map(|(i, &m)| PerceptionRecord {
                segment_id: format!("s{i}"),
                marks: vec![],
                average_mark: m,
            })
            .collect();
        let a = evaluate_agreement(&reports, &labels, 0.16, 2.0).unwrap();
        assert_eq!(a.n_disagreements, 2);
        assert_eq!(a.error_rate, 0.5);
        assert_eq!(
            a.per_segment.iter().map(|s| s.agree).collect::<Vec<_>>(),
            vec![false, false, true, true]
        );
    }

    #[test]
    fn perfect_agreement_is_zero_error() {
        let reports = vec![
            ("a".to_string(), report(0.20)),
            ("b".to_string(), report(0.30)),
        ];
        let labels = vec![
            PerceptionRecord::new("a".into(), vec![2, 3, 2]),
            PerceptionRecord::new("b".into(), vec![3, 3, 3]),
        ];
        let a = evaluate_agreement(&reports, &labels, 0.16, 2.0).unwrap();
        assert_eq!(a.error_rate, 0.0);
    }

    #[test]
    fn missing_label_is_an_error() {
        let reports = vec![("x".to_string(), report(0.2))];
        assert!(matches!(
            evaluate_agreement(&reports, &[], 0.16, 2.0),
            Err(ProsodyError::MissingLabel(id)) if id == "x"
        ));
    }

    #[test]
    fn thirty_two_segments_with_six_disagreements() {
        // 6 disagreements out of 32 segments: 6/32 = 0.1875, i.e. 19% rounded
        let mut reports = Vec::new();
        let mut labels = Vec::new();
        for i in 0..32 {
            let id = format!("seg{i:02}");
            let (pvq, mark) = if i < 6 { (0.05, 3.0) } else { (0.30, 3.0) };
            reports.push((id.clone(), report(pvq)));
            labels.push(PerceptionRecord {
                segment_id: id,
                marks: vec![],
                average_mark: mark,
            });
        }
        let a = evaluate_agreement(&reports, &labels, 0.16, 2.0).unwrap();
        assert_eq!(a.n_disagreements, 6);
        assert!((a.error_rate - 0.1875).abs() < 1e-12);
    }

    #[test]
    fn mean_pvq_examples() {
        let rs: Vec<PvqReport> = [0.1, 0.2, 0.3].iter().map(|&p| report(p)).collect();
        assert!((mean_pvq(&rs).unwrap() - 0.2).abs() < 1e-12);
        assert!((mean_pvq(&rs[..1]).unwrap() - 0.1).abs() < 1e-12);
        assert!(matches!(mean_pvq(&[]), Err(ProsodyError::EmptyInput)));
    }

    #[test]
    fn perception_record_averages_marks() {
        let r = PerceptionRecord::new("s".into(), vec![1, 2, 3]);
        assert_eq!(r.average_mark, 2.0);
    }

    #[test]
    fn csv_export_shape() {
        let rows = vec![("s0".to_string(), report(0.2), Some((2.5, true)))];
        let csv = export_segments_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "segment_id,pvq,mean_f0,std_f0,voiced_fraction,average_mark,label,agree"
        );
        assert!(lines.next().unwrap().starts_with("s0,0.200000,"));
    }
}
