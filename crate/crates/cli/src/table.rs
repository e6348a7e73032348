//! Result tables and their CSV form.

use std::io::Write;

use saddlerisk_core::Error;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    /// Rendered as `ERR:<code>`.
    Err(&'static str),
}

impl Cell {
    pub fn num(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            _ => None,
        }
    }

    /// Scientific notation with 17 significant digits; non-finite numbers become errors.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Num(_) => "ERR:nonfinite".into(),
            Cell::Text(s) => s.clone(),
            Cell::Err(code) => format!("ERR:{code}"),
        }
    }

    pub fn is_err(&self) -> bool {
        matches!(self, Cell::Err(_)) || matches!(self, Cell::Num(x) if !x.is_finite())
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl<E: Into<Cell>> From<Result<f64, E>> for Cell {
    fn from(r: Result<f64, E>) -> Self {
        match r {
            Ok(x) => Cell::Num(x),
            Err(e) => e.into(),
        }
    }
}

impl From<Error> for Cell {
    fn from(e: Error) -> Self {
        Cell::Err(e.code())
    }
}

impl From<&Error> for Cell {
    fn from(e: &Error) -> Self {
        Cell::Err(e.code())
    }
}

/// Relative difference |a − b|/|b| of two cells, or the first error among them.
pub fn rel_diff(value: &Cell, reference: &Cell) -> Cell {
    match (value, reference) {
        (Cell::Num(a), Cell::Num(b)) if *b != 0.0 => Cell::Num((a - b).abs() / b.abs()),
        (Cell::Num(_), Cell::Num(_)) => Cell::Err("prob"),
        (Cell::Err(c), _) | (_, Cell::Err(c)) => Cell::Err(c),
        _ => Cell::Err("na"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    /// Cells of one column, in row order.
    pub fn column(&self, name: &str) -> Vec<&Cell> {
        match self.column_index(name) {
            Some(j) => self.rows.iter().map(|r| &r[j]).collect(),
            None => Vec::new(),
        }
    }

    /// Mean of the numeric cells of `column` over rows where `key` equals `value`.
    pub fn mean_where(&self, column: &str, key: &str, value: &str) -> Option<f64> {
        let (j, k) = (self.column_index(column)?, self.column_index(key)?);
        let v: Vec<f64> =
            self.rows.iter().filter(|r| r[k] == Cell::Text(value.into())).filter_map(|r| r[j].num()).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Number of `ERR:` cells other than `ERR:na`.
    pub fn error_count(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_err() && **c != Cell::Err("na")).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_render_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = Cell::Num(x).render();
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(Cell::Num(f64::NAN).render(), "ERR:nonfinite");
        assert_eq!(Cell::from(Err::<f64, _>(Error::SingularHessian)).render(), "ERR:singular");
    }

    #[test]
    fn csv_quotes_and_terminates_records() {
        let mut t = Table::new(vec!["suite", "detail"]);
        t.push(vec!["a".into(), Cell::Text("x, \"y\"".into())]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "suite,detail\r\na,\"x, \"\"y\"\"\"\r\n");
    }

    #[test]
    fn relative_differences_and_means() {
        assert_eq!(rel_diff(&Cell::Num(1.1), &Cell::Num(1.0)).num().map(|x| (x - 0.1).abs() < 1e-15), Some(true));
        assert_eq!(rel_diff(&Cell::Err("domain"), &Cell::Num(1.0)), Cell::Err("domain"));
        let mut t = Table::new(vec!["measure", "rel_diff"]);
        t.push(vec!["var".into(), 0.2.into()]);
        t.push(vec!["var".into(), 0.4.into()]);
        t.push(vec!["cvar".into(), Cell::Err("na")]);
        assert!((t.mean_where("rel_diff", "measure", "var").unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(t.mean_where("rel_diff", "measure", "cvar"), None);
        assert_eq!(t.error_count(), 0);
    }
}
