//! Command-line front end. Every subcommand is deterministic given its flags
//! and seeds; seeds are echoed in the outputs.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use waysign_core::align::{apply_transform, register_polygon};
use waysign_core::extract::{assemble_floor_graph, exterior};
use waysign_core::geometry::Polygon2D;
use waysign_core::math::Point2;
use waysign_core::osm::osm_to_graph;
use waysign_core::sim::envgen::{campus, random_graph, CampusConfig};
use waysign_core::sim::{generate_episode, run_episode_mcl, summarize, NoiseConfig};
use waysign_core::stitch::stitch;
use waysign_core::{GraphMeta, NavGraph};

use crate::config::Config;
use crate::episode::{read_episode, write_episode};
use crate::error::{self, Error, Result};
use crate::eval::{bench, campaign, oracle_trace, StdClock};
use crate::floorplan::load_floor;
use crate::geojson::osm_from_geojson;
use crate::graph_json::{read_graph, write_graph};
use crate::report::{EpisodeReport, SummaryReport};

fn config_help() -> String {
    format!(
        "Configuration file keys and their defaults (`--config FILE`, TOML; flags override):\n\n{}",
        Config::default().to_toml()
    )
}

#[derive(Debug, Parser)]
#[command(name = "waysign", version, about = "Sign-based localization on navigation graphs", after_long_help = config_help())]
pub struct Cli {
    /// TOML configuration file; see `waysign config` or `--help` for keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Floor mask plus annotation sidecar to a floor graph.
    Extract {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        sidecar: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Graph name; the mask's file stem by default.
        #[arg(long)]
        name: Option<String>,
    },
    /// Registers a floor graph to its building footprint and moves it into
    /// the site frame.
    Align {
        #[arg(long)]
        fp_graph: PathBuf,
        /// JSON array of `[x, y]` meters; the graph's stored exterior if absent.
        #[arg(long)]
        fp_exterior: Option<PathBuf>,
        /// GeoJSON extract holding the footprint.
        #[arg(long)]
        osm: PathBuf,
        #[arg(long)]
        building: String,
        /// Floor index; taken from the graph's nodes if absent.
        #[arg(long)]
        floor: Option<i32>,
        /// Projection origin as `lon,lat`; the extract's bbox centre if absent.
        #[arg(long, value_parser = parse_lonlat)]
        origin: Option<(f64, f64)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Walkable ways of a GeoJSON extract to an outdoor graph.
    Osm {
        #[arg(long)]
        geojson: PathBuf,
        #[arg(long, value_parser = parse_lonlat)]
        origin: Option<(f64, f64)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Joins aligned floor graphs and the outdoor graph into one.
    Stitch {
        #[arg(long, num_args = 1.., required = true)]
        graphs: Vec<PathBuf>,
        #[arg(long)]
        osm_graph: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Exit with status 2 unless the result is connected.
        #[arg(long)]
        require_connected: bool,
    },
    /// Synthesizes a seeded episode log.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sign sightings; `[episode] num_signs` if absent.
        #[arg(long)]
        signs: Option<usize>,
        /// `none` or `mild`; the `[episode]` noise keys if absent.
        #[arg(long)]
        noise_profile: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replays an episode log through the particle filter.
    Localize {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        log: PathBuf,
        /// Report JSON; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Filter seed; the log's seed if absent.
        #[arg(long)]
        seed: Option<u64>,
        /// Also run the exact filter and report the largest TV distance.
        #[arg(long)]
        oracle: bool,
    },
    /// Times observation and motion updates.
    Bench {
        #[arg(long)]
        graph: PathBuf,
        /// `[filter] num_particles` if absent.
        #[arg(long)]
        particles: Option<usize>,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Runs seeded episodes and checks convergence thresholds.
    Eval {
        /// A default campus (seed 1) if absent.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "mild")]
        noise_profile: String,
        /// Required share converged by the second sighting; 0.7 for `mild`,
        /// 0.9 otherwise.
        #[arg(long)]
        min_by_second: Option<f64>,
        /// Required share of converged episodes still correct at the end;
        /// 0.95 for `mild`, 1.0 otherwise.
        #[arg(long)]
        min_stable: Option<f64>,
        /// Summary JSON; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes synthetic inputs.
    Generate {
        #[command(subcommand)]
        what: Generate,
    },
    /// Prints the default configuration file.
    Config,
}

#[derive(Debug, Subcommand)]
pub enum Generate {
    /// Multi-building campus graph.
    Campus {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random connected graph with labeled leaves.
    Random {
        #[arg(long, default_value_t = 30)]
        intersections: usize,
        #[arg(long, default_value_t = 10)]
        places: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Floor masks, sidecars and a GeoJSON extract for two buildings.
    Demo {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_lonlat(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lon,lat")?;
    let lon = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let lat = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lon, lat))
}

fn noise_profile(name: &str) -> Result<NoiseConfig> {
    NoiseConfig::profile(name).ok_or_else(|| Error::Usage(format!("unknown noise profile `{name}` (none, mild)")))
}

fn read_exterior(path: &Path) -> Result<Vec<Point2>> {
    let pts: Vec<[f64; 2]> =
        serde_json::from_str(&error::read_to_string(path)?).map_err(|e| Error::format(path.display().to_string(), e))?;
    Ok(pts.into_iter().map(|[x, y]| Point2::new(x, y)).collect())
}

fn floor_of(g: &NavGraph) -> Result<i32> {
    let mut floors = g.nodes().iter().map(|n| n.floor);
    let f = floors.next().ok_or_else(|| Error::Usage("graph has no nodes".into()))?;
    if floors.any(|x| x != f) {
        return Err(Error::Usage("graph spans several floors; pass --floor".into()));
    }
    Ok(f)
}

pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    let say = |out: &mut dyn std::io::Write, s: String| writeln!(out, "{s}").map_err(|e| Error::io(Path::new("<stdout>"), e));
    match cli.command {
        Command::Extract { mask, sidecar, out: path, name } => {
            let (m, s) = load_floor(&mask, &sidecar)?;
            let ecfg = cfg.extract.to_config()?;
            let name = name.unwrap_or_else(|| mask.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
            let meta = GraphMeta {
                sources: vec![mask.display().to_string()],
                exterior: exterior(&m, &s, &ecfg),
                ..GraphMeta::named(&name)
            };
            let fx = assemble_floor_graph(&m, &s, &ecfg, meta)?;
            for w in &fx.warnings {
                log::warn!("{w}");
            }
            for u in &fx.unmatched_labels {
                log::warn!("unmatched label {u:?}");
            }
            write_graph(&path, &fx.graph)?;
            say(out, format!("nodes {} edges {} regions {}", fx.graph.node_count(), fx.graph.edge_count(), fx.regions.len()))
        }
        Command::Align {
            fp_graph,
            fp_exterior,
            osm,
            building,
            floor,
            origin,
            out: path,
        } => {
            let g = read_graph(&fp_graph)?;
            let ring = match fp_exterior {
                Some(p) => read_exterior(&p)?,
                None => g
                    .meta()
                    .exterior
                    .clone()
                    .ok_or_else(|| Error::Usage("graph stores no exterior; pass --fp-exterior".into()))?,
            };
            let fp = Polygon2D::new(ring)?;
            let (extract, origin) = osm_from_geojson(&error::read_to_string(&osm)?, origin)?;
            let target = extract
                .footprints
                .get(&building)
                .ok_or_else(|| Error::Usage(format!("no footprint named `{building}` in {}", osm.display())))?;
            let floor = match floor {
                Some(f) => f,
                None => floor_of(&g)?,
            };
            let reg = register_polygon(&fp, target, &cfg.align.to_config())?;
            let moved = apply_transform(&g, &reg.transform, floor as f64 * cfg.align.floor_height);
            let specs = moved.edge_specs();
            let (meta, mut nodes, _) = moved.into_parts();
            for n in &mut nodes {
                n.building = Some(building.clone());
            }
            let meta = GraphMeta {
                name: format!("{building}/f{floor}"),
                crs_origin: Some(origin),
                floor_height: cfg.align.floor_height,
                ..meta
            };
            write_graph(&path, &NavGraph::new(meta, nodes, specs)?)?;
            let m = reg.transform;
            say(
                out,
                format!(
                    "iou {:.4} rotation_deg {:.3} scale {:.4} tx {:.3} ty {:.3}",
                    reg.iou,
                    m.rotation.to_degrees(),
                    m.scale,
                    m.tx,
                    m.ty
                ),
            )
        }
        Command::Osm { geojson, origin, out: path } => {
            let (extract, origin) = osm_from_geojson(&error::read_to_string(&geojson)?, origin)?;
            let g = osm_to_graph(&extract, origin, cfg.osm.dp_tol)?;
            write_graph(&path, &g)?;
            say(out, format!("nodes {} edges {} origin {},{}", g.node_count(), g.edge_count(), origin.0, origin.1))
        }
        Command::Stitch {
            graphs,
            osm_graph,
            out: path,
            require_connected,
        } => {
            let gs = graphs.iter().map(|p| read_graph(p)).collect::<Result<Vec<_>>>()?;
            let osm = match osm_graph {
                Some(p) => read_graph(&p)?,
                None => NavGraph::empty(GraphMeta::named("osm")),
            };
            let st = stitch(&gs, &osm, &cfg.stitch.to_config())?;
            for w in &st.warnings {
                log::warn!("{w}");
            }
            write_graph(&path, &st.graph)?;
            say(
                out,
                format!(
                    "nodes {} edges {} components {} connected {}",
                    st.graph.node_count(),
                    st.graph.edge_count(),
                    st.orphans.len() + 1,
                    st.is_connected()
                ),
            )?;
            for o in &st.orphans {
                say(out, format!("orphan {}", o.join(" ")))?;
            }
            if require_connected && !st.is_connected() {
                return Err(Error::QualityGate(format!("stitched graph has {} orphan components", st.orphans.len())));
            }
            Ok(())
        }
        Command::Simulate {
            graph,
            seed,
            signs,
            noise_profile: profile,
            out: path,
        } => {
            let g = read_graph(&graph)?;
            let mut ep = cfg.episode.to_config()?;
            if let Some(n) = signs {
                ep.num_signs = n;
            }
            if let Some(p) = profile {
                ep.noise = noise_profile(&p)?;
            }
            let log = generate_episode(&g, &ep, seed)?;
            write_episode(&path, &log)?;
            say(out, format!("seed {seed} records {} sightings {}", log.records.len(), log.num_sightings()))
        }
        Command::Localize {
            graph,
            log,
            out: path,
            seed,
            oracle,
        } => {
            let g = read_graph(&graph)?;
            let ep = read_episode(&log)?;
            let fcfg = cfg.filter.to_config()?;
            let seed = seed.unwrap_or(ep.seed);
            let res = run_episode_mcl(&g, &ep, &fcfg, seed, &StdClock::default())?;
            let mut report = EpisodeReport::new(&g.meta().name, seed, &res);
            if oracle {
                let tv = oracle_trace(&g, &ep, &fcfg, seed)?;
                report.oracle_max_tv = Some(tv.into_iter().fold(0.0, f64::max));
            }
            match path {
                Some(p) => {
                    error::write(&p, report.to_json())?;
                    say(out, format!("convergence {}", report.convergence))?;
                }
                None => write!(out, "{}", report.to_json()).map_err(|e| Error::io(Path::new("<stdout>"), e))?,
            }
            if let Some(tv) = report.oracle_max_tv {
                log::info!("oracle max tv {tv:.4}");
            }
            Ok(())
        }
        Command::Bench {
            graph,
            particles,
            iters,
            seed,
        } => {
            let g = read_graph(&graph)?;
            let n = particles.unwrap_or(cfg.filter.num_particles);
            let r = bench(&g, n, iters, seed)?;
            say(out, serde_json::to_string_pretty(&r).expect("json"))
        }
        Command::Eval {
            graph,
            episodes,
            seed,
            noise_profile: profile,
            min_by_second,
            min_stable,
            out: path,
        } => {
            let g = match graph {
                Some(p) => read_graph(&p)?,
                None => campus(&CampusConfig::default(), 1),
            };
            let noise = noise_profile(&profile)?;
            let mild = noise != NoiseConfig::NONE;
            let mut ep = cfg.episode.to_config()?;
            ep.noise = noise;
            let fcfg = cfg.filter.to_config()?;
            let runs = campaign(&g, episodes, &ep, &fcfg, seed)?;
            let results: Vec<_> = runs.into_iter().map(|(_, r)| r).collect();
            let summary = summarize(&g.meta().name, &results);
            let by_second = summary.converged_by.get(1).copied().unwrap_or(0.0);
            let converged = results.iter().filter(|r| r.success()).count();
            let stable = results.iter().filter(|r| r.stable()).count();
            let stable_rate = if converged == 0 { 0.0 } else { stable as f64 / converged as f64 };
            let report = serde_json::json!({
                "summary": SummaryReport::from(&summary),
                "seed": seed,
                "noise_profile": profile,
                "converged_by_second": by_second,
                "stable_rate": stable_rate,
            });
            let json = serde_json::to_string_pretty(&report).expect("json") + "\n";
            match path {
                Some(p) => error::write(&p, json)?,
                None => write!(out, "{json}").map_err(|e| Error::io(Path::new("<stdout>"), e))?,
            }
            log::info!("\n{}", summary.to_table());
            let need_by_second = min_by_second.unwrap_or(if mild { 0.7 } else { 0.9 });
            let need_stable = min_stable.unwrap_or(if mild { 0.95 } else { 1.0 });
            if by_second < need_by_second || stable_rate < need_stable {
                return Err(Error::QualityGate(format!(
                    "converged by second sighting {by_second:.3} (need {need_by_second}), stable {stable_rate:.3} (need {need_stable})"
                )));
            }
            Ok(())
        }
        Command::Generate { what } => match what {
            Generate::Campus { seed, out: path } => {
                let g = campus(&CampusConfig::default(), seed);
                write_graph(&path, &g)?;
                say(out, format!("nodes {} edges {}", g.node_count(), g.edge_count()))
            }
            Generate::Random {
                intersections,
                places,
                seed,
                out: path,
            } => {
                let g = random_graph(intersections, places, seed);
                write_graph(&path, &g)?;
                say(out, format!("nodes {} edges {}", g.node_count(), g.edge_count()))
            }
            Generate::Demo { out: dir } => {
                for p in crate::demo::write_demo(&dir)? {
                    say(out, p.display().to_string())?;
                }
                Ok(())
            }
        },
        Command::Config => write!(out, "{}", cfg.to_toml()).map_err(|e| Error::io(Path::new("<stdout>"), e)),
    }
}
