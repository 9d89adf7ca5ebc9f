//! Command-line front end: weave aspects into workbooks, evaluate and
//! inspect them, and check aspect files.
//!
//! Exit codes: 0 success, 1 domain error (parse/validate/weave), 2 usage.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sheetweave::aspect::{parse_aspects, validate, AspectDef};
use sheetweave::formula::evaluate_workbook;
use sheetweave::matcher::enumerate_join_points;
use sheetweave::weaver::weave;
use sheetweave::workbook::{
    load_workbook, save_workbook, CellAddr, CellContent, CellCoord, Workbook, Worksheet,
};

#[derive(Parser)]
#[command(
    name = "sheetweave",
    version,
    about = "Aspect-oriented spreadsheets: weave pointcut/advice rules into workbooks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum ReportFormat {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Apply aspects to a workbook and write the woven result.
    Weave {
        /// Input workbook (.wbk, or .csv with --import-csv).
        workbook: PathBuf,
        /// Aspect files, applied in the order given.
        #[arg(required = true)]
        aspects: Vec<PathBuf>,
        /// Where to write the woven workbook.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        report_format: ReportFormat,
        /// Print cell-level differences between input and output.
        #[arg(long)]
        diff: bool,
        /// Print the evaluated grid of the woven workbook.
        #[arg(long)]
        show_values: bool,
        /// Treat the workbook argument as a CSV file (one sheet).
        #[arg(long)]
        import_csv: bool,
    },
    /// Evaluate a workbook and print each sheet as a grid of values.
    Eval {
        workbook: PathBuf,
        #[arg(long)]
        import_csv: bool,
    },
    /// List the join points each pointcut selects, with bound variables.
    Match {
        workbook: PathBuf,
        #[arg(required = true)]
        aspects: Vec<PathBuf>,
        #[arg(long)]
        import_csv: bool,
    },
    /// Validate aspect files; exit 0 only if all are clean.
    Check {
        #[arg(required = true)]
        aspects: Vec<PathBuf>,
    },
}


/// Write to stdout, exiting quietly when the reader has gone away (for
/// example `sheetweave match ... | head`).
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Weave {
            workbook,
            aspects,
            output,
            report_format,
            diff,
            show_values,
            import_csv,
        } => {
            let wb = load_input(&workbook, import_csv)?;
            let parsed = load_aspects(&aspects)?;
            let (woven, report) = weave(&wb, &parsed).map_err(|e| e.to_string())?;
            fs::write(&output, save_workbook(&woven))
                .map_err(|e| format!("cannot write {}: {e}", output.display()))?;
            match report_format {
                ReportFormat::Text => emit(&report.to_text()),
                ReportFormat::Json => emit(&format!("{}\n", report.to_json())),
            }
            if diff {
                emit(&render_diff(&wb, &woven));
            }
            if show_values {
                emit(&render_grids(&woven));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval {
            workbook,
            import_csv,
        } => {
            let wb = load_input(&workbook, import_csv)?;
            emit(&render_grids(&wb));
            Ok(ExitCode::SUCCESS)
        }
        Command::Match {
            workbook,
            aspects,
            import_csv,
        } => {
            let wb = load_input(&workbook, import_csv)?;
            let parsed = load_aspects(&aspects)?;
            let grid = evaluate_workbook(&wb);
            for aspect in &parsed {
                emit(&format!("aspect {}\n", aspect.name));
                for pc in &aspect.pointcuts {
                    let points = enumerate_join_points(&wb, &grid, pc);
                    if points.is_empty() {
                        emit(&format!("  {}: 0 matches\n", pc.name));
                        continue;
                    }
                    emit(&format!("  {}: {} matches\n", pc.name, points.len()));
                    for (jp, env) in points {
                        emit(&format!("    {} [{}]\n", jp.describe(&wb), env.describe()));
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { aspects } => {
            let mut clean = true;
            for path in &aspects {
                let text = read_file(path)?;
                match parse_aspects(&text) {
                    Err(e) => {
                        clean = false;
                        eprintln!("{}: {e}", path.display());
                    }
                    Ok(defs) => {
                        for def in defs {
                            for diag in validate(&def) {
                                clean = false;
                                eprintln!("{}: aspect {}: {diag}", path.display(), def.name);
                            }
                        }
                    }
                }
            }
            Ok(if clean {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn read_file(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn load_input(path: &Path, import_csv: bool) -> Result<Workbook, String> {
    let text = read_file(path)?;
    let is_csv = import_csv || path.extension().is_some_and(|e| e == "csv");
    if is_csv {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("Sheet1");
        load_csv(&text, name).map_err(|e| format!("{}: {e}", path.display()))
    } else {
        load_workbook(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn load_aspects(paths: &[PathBuf]) -> Result<Vec<AspectDef>, String> {
    let mut out = Vec::new();
    for path in paths {
        let text = read_file(path)?;
        let defs = parse_aspects(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if defs.is_empty() {
            return Err(format!("{}: no aspects found", path.display()));
        }
        out.extend(defs);
    }
    Ok(out)
}

/// One sheet per CSV file. Fields follow the same content rules as workbook
/// cell lines; standard double-quote escaping applies at the CSV layer.
fn load_csv(text: &str, sheet_name: &str) -> Result<Workbook, String> {
    let mut sheet = Worksheet::new(sheet_name);
    for (row_idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        for (col_idx, field) in split_csv_line(line).into_iter().enumerate() {
            let trimmed = field.trim();
            if trimmed.is_empty() {
                continue;
            }
            let content = CellContent::parse(trimmed).map_err(|e| {
                format!(
                    "row {}, column {}: {e}",
                    row_idx + 1,
                    col_idx + 1
                )
            })?;
            sheet.set(CellCoord::new(col_idx as u32, row_idx as u32), content);
        }
    }
    let mut wb = Workbook::new();
    wb.push_sheet(sheet).map_err(|e| e.to_string())?;
    Ok(wb)
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut field = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(ch) = chars.next() {
        match ch {
            '"' if quoted => {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    field.push('"');
                } else {
                    quoted = false;
                }
            }
            '"' if field.trim().is_empty() => {
                quoted = true;
                field.clear();
            }
            ',' if !quoted => {
                fields.push(std::mem::take(&mut field));
            }
            _ => field.push(ch),
        }
    }
    fields.push(field);
    fields
}

/// Render every sheet as an aligned grid of evaluated values.
fn render_grids(wb: &Workbook) -> String {
    let grid = evaluate_workbook(wb);
    let mut out = String::new();
    for (sheet_idx, sheet) in wb.sheets().iter().enumerate() {
        if sheet_idx > 0 {
            out.push('\n');
        }
        out.push_str(&format!("sheet {}\n", sheet.name));
        let Some((min, max)) = sheet.used_region() else {
            continue;
        };
        let cols: Vec<u32> = (min.col..=max.col).collect();
        let rows: Vec<u32> = (min.row..=max.row).collect();
        let display = |row: u32, col: u32| -> String {
            let coord = CellCoord { row, col };
            match sheet.get(coord) {
                None => String::new(),
                Some(_) => grid.scalar(CellAddr::new(sheet_idx, coord)).display_text(),
            }
        };
        let mut widths: Vec<usize> = cols
            .iter()
            .map(|&c| CellCoord { row: 0, col: c }.to_a1().len() - 1)
            .collect();
        for (i, &col) in cols.iter().enumerate() {
            for &row in &rows {
                widths[i] = widths[i].max(display(row, col).chars().count());
            }
        }
        let row_label_width = (max.row + 1).to_string().len();
        out.push_str(&" ".repeat(row_label_width));
        for (i, &col) in cols.iter().enumerate() {
            let header = {
                let a1 = CellCoord { row: 0, col }.to_a1();
                a1[..a1.len() - 1].to_string()
            };
            out.push_str(&format!("  {header:<width$}", width = widths[i]));
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
        for &row in &rows {
            out.push_str(&format!("{:>row_label_width$}", row + 1));
            for (i, &col) in cols.iter().enumerate() {
                out.push_str(&format!("  {:<width$}", display(row, col), width = widths[i]));
            }
            while out.ends_with(' ') {
                out.pop();
            }
            out.push('\n');
        }
    }
    out
}

/// Cell-level differences between two workbooks. Sheets pair up by name;
/// `+` marks insertions, `-` removals, `~` changed content.
fn render_diff(before: &Workbook, after: &Workbook) -> String {
    let mut out = String::new();
    let mut seen_before: Vec<&str> = Vec::new();

    for sheet_after in after.sheets() {
        let name = sheet_after.name.as_str();
        match before.sheet_index(name) {
            None => {
                for (coord, content) in sheet_after.cells() {
                    out.push_str(&format!(
                        "+ {name}!{}: {}\n",
                        coord.to_a1(),
                        content.value_text()
                    ));
                }
            }
            Some(idx) => {
                seen_before.push(name);
                let sheet_before = before.sheet(idx);
                let mut coords: Vec<CellCoord> = sheet_before
                    .cells()
                    .map(|(c, _)| c)
                    .chain(sheet_after.cells().map(|(c, _)| c))
                    .collect();
                coords.sort();
                coords.dedup();
                for coord in coords {
                    match (sheet_before.get(coord), sheet_after.get(coord)) {
                        (None, Some(new)) => out.push_str(&format!(
                            "+ {name}!{}: {}\n",
                            coord.to_a1(),
                            new.value_text()
                        )),
                        (Some(old), None) => out.push_str(&format!(
                            "- {name}!{}: {}\n",
                            coord.to_a1(),
                            old.value_text()
                        )),
                        (Some(old), Some(new)) if old != new => out.push_str(&format!(
                            "~ {name}!{}: {} -> {}\n",
                            coord.to_a1(),
                            old.value_text(),
                            new.value_text()
                        )),
                        _ => {}
                    }
                }
            }
        }
    }
    for sheet_before in before.sheets() {
        if !seen_before.contains(&sheet_before.name.as_str())
            && after.sheet_index(&sheet_before.name).is_none()
        {
            for (coord, content) in sheet_before.cells() {
                out.push_str(&format!(
                    "- {}!{}: {}\n",
                    sheet_before.name,
                    coord.to_a1(),
                    content.value_text()
                ));
            }
        }
    }
    out
}
