//! Observed records and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use crate::codebook::{Codebook, Role};
use crate::error::{Error, Result};

/// Index arithmetic for the flattened observed table, ordered
/// (x, w, z, a, y) with every covariate folded into one composite x.
/// Missing proxies get a single level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedLayout {
    pub nx: usize,
    pub nw: usize,
    pub nz: usize,
    pub ny: usize,
    pub has_w: bool,
    pub has_z: bool,
    /// (position in the observed record, cardinality) per covariate, most
    /// significant first.
    covariates: Vec<(usize, usize)>,
    w_pos: Option<usize>,
    z_pos: Option<usize>,
    a_pos: usize,
    y_pos: usize,
}

impl ObservedLayout {
    /// Layout for records ordered like `codebook.observed()`.
    pub fn new(codebook: &Codebook) -> Result<Self> {
        let observed = codebook.observed();
        observed.require_complete()?;
        let pos = |role| observed.role_index(role);
        let card = |role| observed.cardinality(role);
        let covariates = observed
            .covariate_indices()
            .into_iter()
            .map(|i| (i, observed.variables()[i].cardinality))
            .collect();
        Ok(ObservedLayout {
            nx: observed.x_cardinality(),
            nw: card(Role::OutcomeProxy).unwrap_or(1),
            nz: card(Role::TreatmentProxy).unwrap_or(1),
            ny: card(Role::Outcome).unwrap_or(1),
            has_w: pos(Role::OutcomeProxy).is_some(),
            has_z: pos(Role::TreatmentProxy).is_some(),
            covariates,
            w_pos: pos(Role::OutcomeProxy),
            z_pos: pos(Role::TreatmentProxy),
            a_pos: pos(Role::Treatment).expect("checked by require_complete"),
            y_pos: pos(Role::Outcome).expect("checked by require_complete"),
        })
    }

    pub fn size(&self) -> usize {
        self.nx * self.nw * self.nz * 2 * self.ny
    }

    pub fn flat(&self, x: usize, w: usize, z: usize, a: usize, y: usize) -> usize {
        (((x * self.nw + w) * self.nz + z) * 2 + a) * self.ny + y
    }

    /// Composite covariate index of an observed record.
    pub fn x_of(&self, record: &[usize]) -> usize {
        self.covariates
            .iter()
            .fold(0, |acc, &(pos, card)| acc * card + record[pos])
    }

    pub fn flat_of_record(&self, record: &[usize]) -> usize {
        let w = self.w_pos.map_or(0, |p| record[p]);
        let z = self.z_pos.map_or(0, |p| record[p]);
        self.flat(
            self.x_of(record),
            w,
            z,
            record[self.a_pos],
            record[self.y_pos],
        )
    }
}

/// n observed records over the non-latent variables of a codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    codebook: Codebook,
    records: Vec<Vec<usize>>,
}

impl Dataset {
    /// `records` are ordered like `codebook.observed()`; latent variables are
    /// dropped from the stored codebook.
    pub fn new(codebook: &Codebook, records: Vec<Vec<usize>>) -> Result<Self> {
        let codebook = codebook.observed();
        codebook.require_complete()?;
        if records.is_empty() {
            return Err(Error::InvalidArgument(
                "dataset needs at least one record".into(),
            ));
        }
        let cards: Vec<usize> = codebook.variables().iter().map(|v| v.cardinality).collect();
        for (i, r) in records.iter().enumerate() {
            if r.len() != cards.len() {
                return Err(Error::Schema(format!(
                    "record {i} has {} fields, expected {}",
                    r.len(),
                    cards.len()
                )));
            }
            if let Some(k) = (0..r.len()).find(|&k| r[k] >= cards[k]) {
                return Err(Error::Schema(format!(
                    "record {i}: `{}` = {} out of range (cardinality {})",
                    codebook.variables()[k].name,
                    r[k],
                    cards[k]
                )));
            }
        }
        Ok(Dataset { codebook, records })
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn records(&self) -> &[Vec<usize>] {
        &self.records
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn layout(&self) -> ObservedLayout {
        ObservedLayout::new(&self.codebook).expect("validated on construction")
    }

    /// Flat observed-table cell of every record.
    pub fn cell_indices(&self) -> Vec<usize> {
        let layout = self.layout();
        self.records
            .iter()
            .map(|r| layout.flat_of_record(r))
            .collect()
    }

    /// Reads a header row of variable names and one 0-based category index
    /// per column per record. Column order is free; every observed variable
    /// must appear exactly once.
    pub fn read_csv<R: Read>(codebook: &Codebook, reader: R) -> Result<Self> {
        let observed = codebook.observed();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let mut column_of = vec![None; observed.len()];
        for (col, name) in headers.iter().enumerate() {
            let idx = observed.index_of(name).map_err(|_| {
                Error::Schema(format!(
                    "column `{name}` is not an observed codebook variable"
                ))
            })?;
            if column_of[idx].replace(col).is_some() {
                return Err(Error::Schema(format!("column `{name}` appears twice")));
            }
        }
        if let Some(missing) = (0..observed.len()).find(|&i| column_of[i].is_none()) {
            return Err(Error::Schema(format!(
                "missing column `{}`",
                observed.variables()[missing].name
            )));
        }
        let column_of: Vec<usize> = column_of.into_iter().map(Option::unwrap).collect();
        let mut records = Vec::new();
        for (line, row) in rdr.records().enumerate() {
            let row = row?;
            let record = column_of
                .iter()
                .map(|&c| {
                    row[c].parse::<usize>().map_err(|_| {
                        Error::Schema(format!(
                            "record {line}: `{}` is not a category index",
                            &row[c]
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            records.push(record);
        }
        Dataset::new(&observed, records)
    }

    pub fn from_csv_file(codebook: &Codebook, path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(codebook, std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(self.codebook.variables().iter().map(|v| v.name.as_str()))?;
        for r in &self.records {
            wtr.write_record(r.iter().map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::Variable;

    fn codebook() -> Codebook {
        Codebook::new(
            vec![
                Variable::new("U", 3, Role::LatentConfounder),
                Variable::new("X1", 2, Role::Covariate),
                Variable::new("X2", 3, Role::Covariate),
                Variable::new("A", 2, Role::Treatment),
                Variable::new("Y", 2, Role::Outcome),
            ],
            vec![0.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_with_reordered_columns() {
        let text = "A,Y,X2,X1\n1,0,2,1\n0,1,0,0\n";
        let data = Dataset::read_csv(&codebook(), text.as_bytes()).unwrap();
        assert_eq!(data.records(), &[vec![1, 2, 1, 0], vec![0, 0, 0, 1]]);
        let again = Dataset::read_csv(&codebook(), data.to_csv_string().as_bytes()).unwrap();
        assert_eq!(again, data);
    }

    #[test]
    fn composite_covariate_is_mixed_radix() {
        let layout = ObservedLayout::new(&codebook()).unwrap();
        assert_eq!(layout.nx, 6);
        assert_eq!(layout.x_of(&[1, 2, 0, 0]), 5);
        assert_eq!(layout.x_of(&[0, 2, 0, 0]), 2);
    }

    #[test]
    fn schema_errors() {
        let cb = codebook();
        assert!(matches!(
            Dataset::read_csv(&cb, "A,Y,X1\n0,0,0\n".as_bytes()),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            Dataset::read_csv(&cb, "A,Y,X1,X2,U\n0,0,0,0,0\n".as_bytes()),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            Dataset::read_csv(&cb, "A,Y,X1,X2\n2,0,0,0\n".as_bytes()),
            Err(Error::Schema(_))
        ));
        assert!(Dataset::read_csv(&cb, "A,Y,X1,X2\n".as_bytes()).is_err());
    }
}
