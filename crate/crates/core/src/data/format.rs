//! Text and raster file formats for datasets.
//!
//! Attribute list (one file per split):
//!
//! ```text
//! line 1: image count N
//! line 2: whitespace-separated attribute names
//! lines 3..N+2: <filename> <v_1> ... <v_J>   with every v in {1, -1}
//! ```
//!
//! Landmark list: one line per image, `<filename> <x_1> <y_1> ... <x_T> <y_T>`
//! with raw pixel coordinates. Normalization (x / width, y / height) happens
//! when samples are assembled, using each image's own dimensions.
//!
//! Images are uncompressed binary PGM (`P5`, grayscale) or PPM (`P6`, RGB)
//! with maxval 255; pixel values map to reals in [0, 1] via v / 255.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Parses an attribute list. Returns the attribute names and one
/// `(filename, labels)` row per image, labels as +/-1.0.
pub fn parse_attribute_file(path: &Path) -> Result<(Vec<String>, Vec<(String, Vec<f64>)>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let (line_no, count_line) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing image count line"))?;
    let count: usize = count_line
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, line_no + 1, format!("bad image count {count_line:?}")))?;

    let (line_no, names_line) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 2, "missing attribute names line"))?;
    let names: Vec<String> = names_line.split_whitespace().map(String::from).collect();
    if names.is_empty() {
        return Err(Error::parse(path, line_no + 1, "no attribute names"));
    }
    let j = names.len();

    let mut rows = Vec::with_capacity(count);
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let filename = tokens.next().expect("non-empty line has a token").to_string();
        let values: Vec<&str> = tokens.collect();
        if values.len() != j {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {j} label values, got {}", values.len()),
            ));
        }
        let mut labels = Vec::with_capacity(j);
        for v in values {
            match v {
                "1" | "+1" => labels.push(1.0),
                "-1" => labels.push(-1.0),
                other => {
                    return Err(Error::parse(
                        path,
                        line_no,
                        format!("label must be 1 or -1, got {other:?}"),
                    ))
                }
            }
        }
        rows.push((filename, labels));
    }
    if rows.len() != count {
        return Err(Error::parse(
            path,
            1,
            format!("header announces {count} images but file has {}", rows.len()),
        ));
    }
    Ok((names, rows))
}

pub fn write_attribute_file(
    path: &Path,
    names: &[String],
    rows: &[(String, Vec<f64>)],
) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{}", rows.len());
    let _ = writeln!(out, "{}", names.join(" "));
    for (filename, labels) in rows {
        let _ = write!(out, "{filename}");
        for &v in labels {
            let _ = write!(out, " {}", if v > 0.0 { "1" } else { "-1" });
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses a landmark list with `t` landmarks per image. Coordinates are
/// returned raw, exactly as written.
pub fn parse_landmark_file(path: &Path, t: usize) -> Result<Vec<(String, Vec<f64>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let filename = tokens.next().expect("non-empty line has a token").to_string();
        let values: Vec<&str> = tokens.collect();
        if values.len() != 2 * t {
            return Err(Error::parse(
                path,
                line_no,
                format!(
                    "{filename}: expected {} coordinates, got {}",
                    2 * t,
                    values.len()
                ),
            ));
        }
        let mut coords = Vec::with_capacity(2 * t);
        for v in values {
            coords.push(v.parse::<f64>().map_err(|_| {
                Error::parse(path, line_no, format!("{filename}: bad coordinate {v:?}"))
            })?);
        }
        rows.push((filename, coords));
    }
    Ok(rows)
}

pub fn write_landmark_file(path: &Path, rows: &[(String, Vec<f64>)]) -> Result<()> {
    let mut out = String::new();
    for (filename, coords) in rows {
        let _ = write!(out, "{filename}");
        for &v in coords {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Divides raw pixel coordinates by the image extent: x by width, y by
/// height. Coordinates must land in [0, 1].
pub fn normalize_landmarks(raw: &[f64], width: usize, height: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(raw.len());
    for (i, &v) in raw.iter().enumerate() {
        let extent = if i % 2 == 0 { width } else { height } as f64;
        let norm = v / extent;
        if !(0.0..=1.0).contains(&norm) {
            return Err(Error::InvalidValue(format!(
                "landmark coordinate {v} outside image extent {extent}"
            )));
        }
        out.push(norm);
    }
    Ok(out)
}

/// Reads a binary PGM (grayscale) or PPM (RGB) image into a `[C, H, W]`
/// tensor with values in [0, 1].
pub fn read_raster(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (channels, rest) = match bytes.get(..2) {
        Some(b"P5") => (1usize, &bytes[2..]),
        Some(b"P6") => (3usize, &bytes[2..]),
        _ => return Err(Error::parse(path, 1, "expected P5 or P6 raster magic")),
    };

    // header: width, height, maxval as whitespace-separated tokens,
    // comment lines starting with '#' allowed
    let mut pos = 0;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        while pos < rest.len() && (rest[pos].is_ascii_whitespace() || rest[pos] == b'#') {
            if rest[pos] == b'#' {
                while pos < rest.len() && rest[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < rest.len() && rest[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(path, 1, "truncated raster header"));
        }
        *field = std::str::from_utf8(&rest[start..pos])
            .expect("digits are utf-8")
            .parse()
            .map_err(|_| Error::parse(path, 1, "bad raster header field"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::parse(path, 1, format!("unsupported maxval {maxval}")));
    }
    // single whitespace byte separates header from pixel data
    pos += 1;
    let expected = width * height * channels;
    let pixels = rest
        .get(pos..pos + expected)
        .ok_or_else(|| Error::parse(path, 1, "truncated pixel data"))?;

    // file stores interleaved rows; tensor is channel-major
    let mut data = vec![0.0; expected];
    for y in 0..height {
        for x in 0..width {
            for c in 0..channels {
                let v = pixels[(y * width + x) * channels + c] as f64 / 255.0;
                data[(c * height + y) * width + x] = v;
            }
        }
    }
    Tensor::new(vec![channels, height, width], data)
}

/// Writes a `[1, H, W]` tensor as PGM or a `[3, H, W]` tensor as PPM,
/// quantizing values to 8 bits.
pub fn write_raster(path: &Path, image: &Tensor) -> Result<()> {
    let shape = image.shape();
    if shape.len() != 3 || (shape[0] != 1 && shape[0] != 3) {
        return Err(Error::ShapeMismatch {
            context: "write_raster expects [1|3, H, W]".to_string(),
            expected: vec![1, 0, 0],
            actual: shape.to_vec(),
        });
    }
    let (channels, height, width) = (shape[0], shape[1], shape[2]);
    let magic = if channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    let data = image.data();
    for y in 0..height {
        for x in 0..width {
            for c in 0..channels {
                let v = data[(c * height + y) * width + x];
                out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn well_formed_attribute_file_parses_exactly() {
        let dir = tmp();
        let path = dir.path().join("attrs.txt");
        std::fs::write(&path, "2\nsmile hat\nimg0.pgm 1 -1\nimg1.pgm -1 -1\n").unwrap();
        let (names, rows) = parse_attribute_file(&path).unwrap();
        assert_eq!(names, vec!["smile", "hat"]);
        assert_eq!(rows[0], ("img0.pgm".to_string(), vec![1.0, -1.0]));
        assert_eq!(rows[1], ("img1.pgm".to_string(), vec![-1.0, -1.0]));
    }

    #[test]
    fn zero_label_token_reports_its_line() {
        let dir = tmp();
        let path = dir.path().join("attrs.txt");
        std::fs::write(&path, "1\nsmile hat\nimg0.pgm 1 0\n").unwrap();
        match parse_attribute_file(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_token_count_reports_its_line() {
        let dir = tmp();
        let path = dir.path().join("attrs.txt");
        std::fs::write(&path, "1\nsmile hat\nimg0.pgm 1\n").unwrap();
        match parse_attribute_file(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn attribute_round_trip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let names: Vec<String> = (0..5).map(|i| format!("attr{i}")).collect();
        let rows: Vec<(String, Vec<f64>)> = (0..30)
            .map(|i| {
                let labels = (0..5)
                    .map(|_| if rng.random_range(0.0..1.0) < 0.5 { 1.0 } else { -1.0 })
                    .collect();
                (format!("img_{i:04}.pgm"), labels)
            })
            .collect();
        let dir = tmp();
        let path = dir.path().join("attrs.txt");
        write_attribute_file(&path, &names, &rows).unwrap();
        let (got_names, got_rows) = parse_attribute_file(&path).unwrap();
        assert_eq!(got_names, names);
        assert_eq!(got_rows, rows);
    }

    #[test]
    fn landmark_lines_parse_to_2t_vectors() {
        let dir = tmp();
        let path = dir.path().join("lms.txt");
        std::fs::write(&path, "img0.pgm 3 4 8.5 0\n").unwrap();
        let rows = parse_landmark_file(&path, 2).unwrap();
        assert_eq!(rows[0].1, vec![3.0, 4.0, 8.5, 0.0]);
    }

    #[test]
    fn wrong_coordinate_count_names_the_file() {
        let dir = tmp();
        let path = dir.path().join("lms.txt");
        std::fs::write(&path, "img7.pgm 3 4\n").unwrap();
        match parse_landmark_file(&path, 2) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("img7.pgm")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn landmark_round_trip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<(String, Vec<f64>)> = (0..20)
            .map(|i| {
                let coords = (0..8).map(|_| rng.random_range(0.0..16.0)).collect();
                (format!("img_{i:04}.pgm"), coords)
            })
            .collect();
        let dir = tmp();
        let path = dir.path().join("lms.txt");
        write_landmark_file(&path, &rows).unwrap();
        let got = parse_landmark_file(&path, 4).unwrap();
        assert_eq!(got, rows);
    }

    #[test]
    fn coordinate_at_image_width_normalizes_to_one() {
        let norm = normalize_landmarks(&[16.0, 8.0], 16, 16).unwrap();
        assert_eq!(norm, vec![1.0, 0.5]);
    }

    #[test]
    fn out_of_extent_coordinate_rejected() {
        assert!(normalize_landmarks(&[17.0, 0.0], 16, 16).is_err());
        assert!(normalize_landmarks(&[-0.5, 0.0], 16, 16).is_err());
    }

    #[test]
    fn raster_round_trip_preserves_quantized_values() {
        let dir = tmp();
        let path = dir.path().join("img.pgm");
        let data: Vec<f64> = (0..64).map(|i| (i as f64 * 4.0) / 255.0).collect();
        let image = Tensor::new(vec![1, 8, 8], data).unwrap();
        write_raster(&path, &image).unwrap();
        let back = read_raster(&path).unwrap();
        assert_eq!(back, image);
    }

    #[test]
    fn rgb_raster_round_trip() {
        let dir = tmp();
        let path = dir.path().join("img.ppm");
        let data: Vec<f64> = (0..48).map(|i| (i as f64 * 5.0) / 255.0).collect();
        let image = Tensor::new(vec![3, 4, 4], data).unwrap();
        write_raster(&path, &image).unwrap();
        let back = read_raster(&path).unwrap();
        assert_eq!(back, image);
    }

    proptest! {
        /// Deleting any single label token from a valid file must be caught.
        #[test]
        fn parser_rejects_token_count_corruption(
            n_rows in 1usize..8,
            n_attrs in 1usize..6,
            victim_row in 0usize..8,
            victim_col in 0usize..6,
            seed in 0u64..1000,
        ) {
            let victim_row = victim_row % n_rows;
            let victim_col = victim_col % n_attrs;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let names: Vec<String> = (0..n_attrs).map(|i| format!("a{i}")).collect();
            let rows: Vec<(String, Vec<f64>)> = (0..n_rows)
                .map(|i| {
                    let labels = (0..n_attrs)
                        .map(|_| if rng.random_range(0.0..1.0) < 0.5 { 1.0 } else { -1.0 })
                        .collect();
                    (format!("img{i}.pgm"), labels)
                })
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("attrs.txt");
            write_attribute_file(&path, &names, &rows).unwrap();
            prop_assert!(parse_attribute_file(&path).is_ok());

            // drop one token from one data line
            let text = std::fs::read_to_string(&path).unwrap();
            let mut lines: Vec<String> = text.lines().map(String::from).collect();
            let line = &mut lines[2 + victim_row];
            let mut tokens: Vec<&str> = line.split_whitespace().collect();
            tokens.remove(1 + victim_col);
            *line = tokens.join(" ");
            std::fs::write(&path, lines.join("\n")).unwrap();
            prop_assert!(parse_attribute_file(&path).is_err());
        }
    }
}
