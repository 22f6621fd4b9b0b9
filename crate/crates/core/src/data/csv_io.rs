use std::path::{Path, PathBuf};

use super::{format_number, Attribute, AttributeValue, Dataset, LabeledPair, Record, Table};
use crate::error::DataError;

pub const SPLITS: [&str; 3] = ["train", "valid", "test"];

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Load {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(file);
    let csv_err = |e: csv::Error| DataError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn load_table(path: &Path) -> Result<Table, DataError> {
    let (header, rows) = read_csv(path)?;
    let id_col = header
        .iter()
        .position(|h| h == "id")
        .ok_or_else(|| DataError::Csv {
            path: path.to_path_buf(),
            message: "no `id` column".into(),
        })?;
    // A column is numeric when every non-empty cell parses as a finite number.
    let numeric: Vec<bool> = (0..header.len())
        .map(|c| {
            let mut any = false;
            let all = rows.iter().all(|r| {
                let cell = &r[c];
                if cell.is_empty() {
                    true
                } else {
                    any = true;
                    parse_number(cell).is_some()
                }
            });
            all && any
        })
        .collect();

    let mut ids = Vec::with_capacity(rows.len());
    let mut records = Vec::with_capacity(rows.len());
    for row in rows {
        ids.push(row[id_col].clone());
        let attributes = header
            .iter()
            .enumerate()
            .filter(|&(c, _)| c != id_col)
            .map(|(c, name)| {
                let cell = &row[c];
                let value = if cell.is_empty() {
                    AttributeValue::Null
                } else if numeric[c] {
                    AttributeValue::Number(parse_number(cell).unwrap())
                } else {
                    AttributeValue::Text(cell.clone())
                };
                Attribute {
                    name: name.clone(),
                    value,
                }
            })
            .collect();
        records.push(Record::new(attributes)?);
    }
    Ok(Table { ids, records })
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "1.0" | "true" => Some(true),
        "0" | "0.0" | "false" => Some(false),
        _ => None,
    }
}

fn load_split(
    path: &Path,
    file: &str,
    a: &Table,
    b: &Table,
) -> Result<Vec<LabeledPair>, DataError> {
    let (header, rows) = read_csv(path)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::Csv {
                path: path.to_path_buf(),
                message: format!("no `{name}` column"),
            })
    };
    let (lc, rc, yc) = (col("ltable_id")?, col("rtable_id")?, col("label")?);
    fn index_of(t: &Table) -> std::collections::HashMap<&str, usize> {
        t.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
    }
    let (ai, bi) = (index_of(a), index_of(b));
    let mut out = Vec::with_capacity(rows.len());
    let mut dangling = Vec::new();
    for (row_no, row) in rows.iter().enumerate() {
        let label = parse_label(&row[yc]).ok_or_else(|| DataError::Csv {
            path: path.to_path_buf(),
            message: format!("row {row_no}: label {:?} is not binary", row[yc]),
        })?;
        match (ai.get(row[lc].as_str()), bi.get(row[rc].as_str())) {
            (Some(&a_index), Some(&b_index)) => out.push(LabeledPair {
                a_index,
                b_index,
                label,
            }),
            _ => dangling.push(row_no),
        }
    }
    if !dangling.is_empty() {
        return Err(DataError::DanglingIds {
            file: file.to_string(),
            rows: dangling,
        });
    }
    Ok(out)
}

/// Loads a benchmark directory holding `tableA.csv`, `tableB.csv` and the
/// `train.csv` / `valid.csv` / `test.csv` candidate splits.
pub fn load_benchmark_dataset(dir: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let dir = dir.as_ref();
    let file = |name: &str| -> Result<PathBuf, DataError> {
        let p = dir.join(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(DataError::Load {
                path: p,
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
            })
        }
    };
    let table_a = load_table(&file("tableA.csv")?)?;
    let table_b = load_table(&file("tableB.csv")?)?;
    let mut splits = Vec::new();
    for name in SPLITS {
        let fname = format!("{name}.csv");
        let pairs = load_split(&file(&fname)?, &fname, &table_a, &table_b)?;
        splits.push((name.to_string(), pairs));
    }
    Ok(Dataset {
        table_a,
        table_b,
        splits,
    })
}

fn write_table(path: &Path, table: &Table) -> Result<(), DataError> {
    let io = |e: csv::Error| DataError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let names: Vec<&str> = table
        .records
        .first()
        .map(|r| r.attributes().iter().map(|a| a.name.as_str()).collect())
        .unwrap_or_default();
    let mut header = vec!["id"];
    header.extend(&names);
    w.write_record(&header).map_err(io)?;
    for (id, rec) in table.ids.iter().zip(&table.records) {
        let mut row = vec![id.clone()];
        row.extend(rec.attributes().iter().map(|a| match &a.value {
            AttributeValue::Number(x) => format_number(*x),
            v => v.render(),
        }));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| DataError::Load {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes `dataset` in the layout read by [`load_benchmark_dataset`].
pub fn save_benchmark_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<(), DataError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| DataError::Load {
        path: dir.to_path_buf(),
        source,
    })?;
    write_table(&dir.join("tableA.csv"), &dataset.table_a)?;
    write_table(&dir.join("tableB.csv"), &dataset.table_b)?;
    for (name, pairs) in &dataset.splits {
        let path = dir.join(format!("{name}.csv"));
        let io = |e: csv::Error| DataError::Csv {
            path: path.clone(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(["ltable_id", "rtable_id", "label"])
            .map_err(io)?;
        for p in pairs {
            w.write_record([
                dataset.table_a.ids[p.a_index].as_str(),
                dataset.table_b.ids[p.b_index].as_str(),
                if p.label { "1" } else { "0" },
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|source| DataError::Load {
            path: path.clone(),
            source,
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        std::fs::write(dir.join(name), body).unwrap();
    }

    fn toy(dir: &Path) {
        write(
            dir,
            "tableA.csv",
            "id,title,price\n1,\"belkin shield, micra\",47.88\n2,ipod case,\n",
        );
        write(dir, "tableB.csv", "id,title,price\n7,belkin micra,12.49\n8,,3\n");
        write(dir, "train.csv", "ltable_id,rtable_id,label\n1,7,1\n2,8,0\n");
        write(dir, "valid.csv", "ltable_id,rtable_id,label\n2,7,0\n");
        write(dir, "test.csv", "ltable_id,rtable_id,label\n1,8,0\n");
    }

    #[test]
    fn loads_types_and_nulls() {
        let tmp = tempfile::tempdir().unwrap();
        toy(tmp.path());
        let ds = load_benchmark_dataset(tmp.path()).unwrap();
        assert_eq!(ds.candidate_count(), 4);
        assert_eq!(ds.match_count(), 1);
        let a0 = &ds.table_a.records[0];
        assert_eq!(a0.get("title").unwrap(), &AttributeValue::from("belkin shield, micra"));
        assert_eq!(a0.get("price").unwrap(), &AttributeValue::Number(47.88));
        assert!(ds.table_a.records[1].get("price").unwrap().is_null());
        assert!(ds.table_b.records[1].get("title").unwrap().is_null());
        let p = ds.pair("train", 0).unwrap();
        assert_eq!(p.pair_id, "train/0");
        assert_eq!(p.b.get("title").unwrap(), &AttributeValue::from("belkin micra"));
    }

    #[test]
    fn missing_table_names_file() {
        let tmp = tempfile::tempdir().unwrap();
        toy(tmp.path());
        std::fs::remove_file(tmp.path().join("tableB.csv")).unwrap();
        let err = load_benchmark_dataset(tmp.path()).unwrap_err();
        assert!(err.to_string().contains("tableB.csv"), "{err}");
    }

    #[test]
    fn dangling_ids_listed() {
        let tmp = tempfile::tempdir().unwrap();
        toy(tmp.path());
        write(
            tmp.path(),
            "test.csv",
            "ltable_id,rtable_id,label\n1,8,0\n9,8,1\n1,99,0\n",
        );
        match load_benchmark_dataset(tmp.path()).unwrap_err() {
            DataError::DanglingIds { file, rows } => {
                assert_eq!(file, "test.csv");
                assert_eq!(rows, vec![1, 2]);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn save_then_load_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        toy(tmp.path());
        let ds = load_benchmark_dataset(tmp.path()).unwrap();
        let out = tmp.path().join("copy");
        save_benchmark_dataset(&ds, &out).unwrap();
        assert_eq!(load_benchmark_dataset(&out).unwrap(), ds);
    }
}
