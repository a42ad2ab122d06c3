use std::io::{Read, Write};

use ddval_core::{ClientId, PointId, SubjectId};

use crate::{Result, SynthError};

type Point = ddval_core::Point;

/// Columns: `point_id, subject_id, client_id, f_0..f_{d-1}, y_0..y_{L-1}, flips`.
pub fn write_points_csv(points: &[Point], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let (d, l) = points
        .first()
        .map(|p| (p.features.len(), p.labels.len()))
        .unwrap_or((0, 0));
    let mut header = vec!["point_id".to_string(), "subject_id".into(), "client_id".into()];
    header.extend((0..d).map(|i| format!("f_{i}")));
    header.extend((0..l).map(|i| format!("y_{i}")));
    header.push("flips".into());
    w.write_record(&header)?;
    for p in points {
        if p.features.len() != d || p.labels.len() != l {
            return Err(SynthError::Malformed(format!(
                "point {} has a different shape",
                p.point_id
            )));
        }
        let mut row = vec![
            p.point_id.0.to_string(),
            p.subject_id.0.to_string(),
            p.client_id.0.to_string(),
        ];
        row.extend(p.features.iter().map(|x| x.to_string()));
        row.extend(p.labels.iter().map(|y| y.to_string()));
        row.push(p.flips.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_points_csv(reader: impl Read) -> Result<Vec<Point>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let d = header.iter().filter(|h| h.starts_with("f_")).count();
    let l = header.iter().filter(|h| h.starts_with("y_")).count();
    let malformed = |what: &str| SynthError::Malformed(what.to_string());
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != 4 + d + l {
            return Err(malformed("wrong column count"));
        }
        let int = |i: usize| -> Result<u64> { record[i].parse().map_err(|_| malformed(&record[i])) };
        let features = (0..d)
            .map(|i| record[3 + i].parse::<f64>().map_err(|_| malformed(&record[3 + i])))
            .collect::<Result<Vec<_>>>()?;
        let labels = (0..l)
            .map(|i| match &record[3 + d + i] {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(malformed(other)),
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(Point {
            point_id: PointId(int(0)?),
            subject_id: SubjectId(int(1)?),
            client_id: ClientId(u32::try_from(int(2)?).map_err(|_| malformed("client id"))?),
            features,
            labels,
            flips: u32::try_from(int(3 + d + l)?).map_err(|_| malformed("flips"))?,
        });
    }
    Ok(out)
}
