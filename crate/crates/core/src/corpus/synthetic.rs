//! Synthetic corpora with controlled label ambiguity.
//!
//! Labels are grouped into domains. Two labels in different domains that
//! draw cells from the same value pool form an ambiguous pair: their values
//! are identically distributed, so only the co-occurring labels of the table
//! tell them apart. Labels whose pool is not shared are anchors, and every
//! generated table contains at least one anchor when its domain has any.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Column, Table};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValuePool {
    Words {
        words: Vec<String>,
    },
    /// One entry from each part, joined by `separator`.
    Composite {
        parts: Vec<Vec<String>>,
        separator: String,
    },
    Integer {
        min: i64,
        max: i64,
    },
    Decimal {
        min: f64,
        max: f64,
        decimals: usize,
    },
    Date {
        from_year: i32,
        to_year: i32,
    },
}

impl ValuePool {
    fn validate(&self, name: &str) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("pool {name}: {m}")));
        match self {
            ValuePool::Words { words } if words.is_empty() => bad("no words"),
            ValuePool::Composite { parts, .. }
                if parts.is_empty() || parts.iter().any(Vec::is_empty) =>
            {
                bad("empty part")
            }
            ValuePool::Integer { min, max } if min > max => bad("min > max"),
            ValuePool::Decimal { min, max, .. } if !(min <= max) => bad("min > max"),
            ValuePool::Date { from_year, to_year } if from_year > to_year => bad("from > to"),
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> String {
        match self {
            ValuePool::Words { words } => words.choose(rng).cloned().unwrap_or_default(),
            ValuePool::Composite { parts, separator } => parts
                .iter()
                .map(|p| p.choose(rng).map(String::as_str).unwrap_or(""))
                .collect::<Vec<_>>()
                .join(separator),
            ValuePool::Integer { min, max } => rng.gen_range(*min..=*max).to_string(),
            ValuePool::Decimal { min, max, decimals } => {
                let x = if min == max {
                    *min
                } else {
                    rng.gen_range(*min..*max)
                };
                format!("{x:.prec$}", prec = *decimals)
            }
            ValuePool::Date { from_year, to_year } => {
                let y = rng.gen_range(*from_year..=*to_year);
                let m = rng.gen_range(1..=12);
                let d = rng.gen_range(1..=28);
                format!("{y:04}-{m:02}-{d:02}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub label: String,
    pub pool: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub labels: Vec<LabelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub tables: usize,
    pub rows_min: usize,
    pub rows_max: usize,
    pub columns_min: usize,
    pub columns_max: usize,
    /// Reject configurations without any ambiguous pair.
    pub require_ambiguity: bool,
    pub pools: BTreeMap<String, ValuePool>,
    pub domains: Vec<Domain>,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.tables == 0 {
            return bad("tables must be positive".into());
        }
        if self.rows_min == 0 || self.rows_min > self.rows_max {
            return bad(format!(
                "bad row range {}..={}",
                self.rows_min, self.rows_max
            ));
        }
        if self.columns_min == 0 || self.columns_min > self.columns_max {
            return bad(format!(
                "bad column range {}..={}",
                self.columns_min, self.columns_max
            ));
        }
        if self.domains.is_empty() {
            return bad("no domains".into());
        }
        for (name, pool) in &self.pools {
            pool.validate(name)?;
        }
        for d in &self.domains {
            if d.labels.is_empty() {
                return bad(format!("domain {} has no labels", d.name));
            }
            let mut seen = BTreeSet::new();
            for l in &d.labels {
                if !self.pools.contains_key(&l.pool) {
                    return bad(format!(
                        "label {} references unknown pool {}",
                        l.label, l.pool
                    ));
                }
                if !seen.insert(&l.label) {
                    return bad(format!("label {} repeated in domain {}", l.label, d.name));
                }
            }
        }
        if self.require_ambiguity && self.ambiguous_pairs().is_empty() {
            return bad("ambiguity requested but no two labels share a value pool".into());
        }
        Ok(())
    }

    /// Distinct label pairs drawing from one pool, sorted.
    pub fn ambiguous_pairs(&self) -> Vec<(String, String)> {
        let mut by_pool: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for d in &self.domains {
            for l in &d.labels {
                by_pool.entry(&l.pool).or_default().insert(&l.label);
            }
        }
        let mut pairs = Vec::new();
        for labels in by_pool.values() {
            let labels: Vec<&str> = labels.iter().copied().collect();
            for i in 0..labels.len() {
                for j in i + 1..labels.len() {
                    pairs.push((labels[i].to_string(), labels[j].to_string()));
                }
            }
        }
        pairs
    }

    /// Labels that belong to some ambiguous pair.
    pub fn ambiguous_labels(&self) -> BTreeSet<String> {
        self.ambiguous_pairs()
            .into_iter()
            .flat_map(|(a, b)| [a, b])
            .collect()
    }
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn label(label: &str, pool: &str) -> LabelSpec {
    LabelSpec {
        label: label.into(),
        pool: pool.into(),
    }
}

impl Default for GeneratorConfig {
    /// Four domains, five ambiguous pairs (country, city, date, year and
    /// small-count pools each shared by two domains).
    fn default() -> Self {
        let mut pools = BTreeMap::new();
        let mut add = |name: &str, pool: ValuePool| {
            pools.insert(name.to_string(), pool);
        };
        add(
            "country",
            ValuePool::Words {
                words: words(&[
                    "France",
                    "Germany",
                    "Brazil",
                    "Argentina",
                    "Spain",
                    "Italy",
                    "Japan",
                    "Canada",
                    "Mexico",
                    "Nigeria",
                    "Egypt",
                    "Australia",
                    "Sweden",
                    "Norway",
                    "Portugal",
                    "Chile",
                    "Peru",
                    "Ghana",
                    "Kenya",
                    "India",
                    "China",
                    "Poland",
                    "Austria",
                    "Belgium",
                ]),
            },
        );
        add(
            "city",
            ValuePool::Words {
                words: words(&[
                    "Paris", "Berlin", "Madrid", "Rome", "Tokyo", "Toronto", "Lagos", "Cairo",
                    "Sydney", "Oslo", "Lisbon", "Lima", "Nairobi", "Mumbai", "Vienna", "Prague",
                    "Dublin", "Seoul", "Chicago", "Denver", "Austin", "Boston",
                ]),
            },
        );
        add(
            "date",
            ValuePool::Date {
                from_year: 1950,
                to_year: 2015,
            },
        );
        add(
            "year",
            ValuePool::Integer {
                min: 1950,
                max: 2020,
            },
        );
        add("count", ValuePool::Integer { min: 0, max: 60 });
        add(
            "footballer",
            ValuePool::Composite {
                parts: vec![
                    words(&[
                        "Luis", "Marco", "Diego", "Paulo", "Andres", "Thiago", "Sergio", "Bruno",
                    ]),
                    words(&[
                        "Silva", "Rossi", "Moreno", "Costa", "Ramos", "Alves", "Torres", "Suarez",
                    ]),
                ],
                separator: " ".into(),
            },
        );
        add(
            "club",
            ValuePool::Composite {
                parts: vec![
                    words(&[
                        "Riverside",
                        "Northport",
                        "Eastfield",
                        "Kingsbury",
                        "Ashford",
                        "Millbrook",
                    ]),
                    words(&["FC", "United", "Rovers", "Athletic", "Wanderers"]),
                ],
                separator: " ".into(),
            },
        );
        add(
            "position",
            ValuePool::Words {
                words: words(&[
                    "goalkeeper",
                    "defender",
                    "midfielder",
                    "forward",
                    "winger",
                    "striker",
                ]),
            },
        );
        add(
            "racer",
            ValuePool::Composite {
                parts: vec![
                    words(&[
                        "Kimi", "Jenson", "Niki", "Ayrton", "Mika", "Nelson", "Jody", "Keke",
                    ]),
                    words(&[
                        "Hakkinen",
                        "Prost",
                        "Lauda",
                        "Hunt",
                        "Piquet",
                        "Rosberg",
                        "Scheckter",
                        "Villeneuve",
                    ]),
                ],
                separator: " ".into(),
            },
        );
        add(
            "car",
            ValuePool::Composite {
                parts: vec![
                    words(&[
                        "Ferrari", "McLaren", "Williams", "Lotus", "Brabham", "Tyrrell",
                    ]),
                    words(&["F1", "MP4", "FW07", "T33", "BT52", "008"]),
                ],
                separator: "-".into(),
            },
        );
        add(
            "lap_time",
            ValuePool::Decimal {
                min: 62.0,
                max: 118.0,
                decimals: 3,
            },
        );
        add(
            "band",
            ValuePool::Composite {
                parts: vec![
                    words(&["The"]),
                    words(&[
                        "Velvet", "Electric", "Silent", "Golden", "Hollow", "Crimson",
                    ]),
                    words(&["Owls", "Tides", "Engines", "Rivers", "Ghosts", "Lanterns"]),
                ],
                separator: " ".into(),
            },
        );
        add(
            "album",
            ValuePool::Composite {
                parts: vec![
                    words(&["Midnight", "Paper", "Neon", "Quiet", "Broken", "Endless"]),
                    words(&["Songs", "Hearts", "Skies", "Letters", "Dreams", "Sessions"]),
                ],
                separator: " ".into(),
            },
        );
        add("track_count", ValuePool::Integer { min: 100, max: 999 });
        add(
            "filmmaker",
            ValuePool::Composite {
                parts: vec![
                    words(&[
                        "Akira", "Agnes", "Federico", "Ingmar", "Satyajit", "Werner", "Chantal",
                        "Yasujiro",
                    ]),
                    words(&[
                        "Kurosawa", "Varda", "Fellini", "Bergman", "Ray", "Herzog", "Akerman",
                        "Ozu",
                    ]),
                ],
                separator: " ".into(),
            },
        );
        add(
            "film_title",
            ValuePool::Composite {
                parts: vec![
                    words(&[
                        "Return of the",
                        "Night of the",
                        "Journey to the",
                        "Secret of the",
                        "Last",
                    ]),
                    words(&[
                        "Stranger", "Harbor", "Mountain", "Witness", "Garden", "Empire",
                    ]),
                ],
                separator: " ".into(),
            },
        );
        add(
            "runtime",
            ValuePool::Decimal {
                min: 1.2,
                max: 3.4,
                decimals: 2,
            },
        );

        let domains = vec![
            Domain {
                name: "football".into(),
                labels: vec![
                    label("player", "footballer"),
                    label("club", "club"),
                    label("position", "position"),
                    label("nationality", "country"),
                    label("birth date", "date"),
                    label("goals", "count"),
                ],
            },
            Domain {
                name: "racing".into(),
                labels: vec![
                    label("driver", "racer"),
                    label("car", "car"),
                    label("fastest lap", "lap_time"),
                    label("location", "country"),
                    label("race date", "date"),
                    label("laps", "count"),
                ],
            },
            Domain {
                name: "music".into(),
                labels: vec![
                    label("artist", "band"),
                    label("album", "album"),
                    label("catalog number", "track_count"),
                    label("origin", "city"),
                    label("release year", "year"),
                ],
            },
            Domain {
                name: "film".into(),
                labels: vec![
                    label("director", "filmmaker"),
                    label("film", "film_title"),
                    label("runtime hours", "runtime"),
                    label("filming location", "city"),
                    label("premiere year", "year"),
                ],
            },
        ];
        GeneratorConfig {
            tables: 200,
            rows_min: 20,
            rows_max: 60,
            columns_min: 3,
            columns_max: 5,
            require_ambiguity: true,
            pools,
            domains,
        }
    }
}

/// Generates `config.tables` labeled tables. Pure in `(config, seed)`.
pub fn generate_synthetic_corpus(config: &GeneratorConfig, seed: u64) -> Result<Vec<Table>> {
    config.validate()?;
    let shared: BTreeSet<String> = config.ambiguous_labels();
    let indices: Vec<usize> = (0..config.tables).collect();
    Ok(crate::parallel::map(&indices, |&t| {
        generate_table(config, &shared, seed, t)
    }))
}

fn generate_table(
    config: &GeneratorConfig,
    ambiguous: &BTreeSet<String>,
    seed: u64,
    index: usize,
) -> Table {
    let mut rng = seed::rng(seed, &[0x7ab1e, index as u64]);
    let domain = config
        .domains
        .choose(&mut rng)
        .expect("validated: at least one domain");
    let n_labels = domain.labels.len();
    let width = rng
        .gen_range(config.columns_min..=config.columns_max)
        .min(n_labels);
    let mut chosen = rand::seq::index::sample(&mut rng, n_labels, width).into_vec();
    let anchors: Vec<usize> = (0..n_labels)
        .filter(|&i| !ambiguous.contains(&domain.labels[i].label))
        .collect();
    if !anchors.is_empty() && chosen.iter().all(|i| !anchors.contains(i)) {
        let slot = rng.gen_range(0..chosen.len());
        chosen[slot] = *anchors.choose(&mut rng).expect("non-empty");
    }
    chosen.sort_unstable();

    let rows = rng.gen_range(config.rows_min..=config.rows_max);
    let columns = chosen
        .into_iter()
        .map(|li| {
            let spec = &domain.labels[li];
            let pool = &config.pools[&spec.pool];
            let values = (0..rows).map(|_| pool.draw(&mut rng)).collect();
            Column::new(Some(&spec.label), values)
        })
        .collect();
    Table {
        id: format!("syn{index:05}"),
        columns,
    }
}
