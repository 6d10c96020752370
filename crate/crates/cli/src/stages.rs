use std::path::{Path, PathBuf};

use wildfusion::field::{query_grid, train as fit, FieldModel, FrameInput, TrainingFrame};
use wildfusion::io::*;
use wildfusion::label::{label_frame, LabeledFrame, TraversabilityCalibration};
use wildfusion::metrics::{evaluate, EvalFrame, EvalOptions, FieldPredictor, GroundTruthPredictor, ModelPredictor};
use wildfusion::nav::{
    a_star, elevation_costmap, field_lattice, full_costmap, gaussian_weight, ground_from_min_filter, pixel_traversability,
    planner_grid, project_field_to_grids, replay_cost, semantic_costmap, semantic_mask, Costmap, Grid, GridSpec,
};
use wildfusion::scene::{Frame, Point3, SemanticTable, COLOR_BINS};
use wildfusion::synth::{generate_scene, generate_trajectory, make_dataset, mix_seed, record_frame, Split};
use wildfusion::{Error, Result};

use crate::{Planner, SplitChoice};

const MANIFEST: &str = "manifest.toml";
/// Vertical spacing of field queries for projection, meters.
const LATTICE_DZ: f64 = 0.05;
/// Field columns span this far below and above the sensor.
const LATTICE_BELOW: f64 = 1.5;
const LATTICE_ABOVE: f64 = 1.0;
/// Cells searched for the local ground under obstacles.
const GROUND_RADIUS: usize = 10;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// Explicit config file, else the snapshot in `fallback`, else defaults.
fn resolve_config(explicit: Option<&Path>, fallback: Option<&Path>) -> Result<PipelineConfig> {
    if let Some(p) = explicit {
        return load_config(p);
    }
    match fallback.map(|d| d.join(CONFIG_SNAPSHOT)) {
        Some(p) if p.exists() => load_config(&p),
        _ => Ok(PipelineConfig::default()),
    }
}

fn frame_file(id: u32) -> String {
    format!("frames/frame_{id:04}.wfrm")
}

fn label_file(id: u32) -> String {
    format!("labels/labels_{id:04}.wlbl")
}

pub fn synth(out: &Path, config: Option<&Path>, seed: Option<u64>) -> Result<()> {
    let mut cfg = resolve_config(config, None)?;
    if let Some(s) = seed {
        cfg.synth.scene_seed = s;
    }
    cfg.validate()?;
    create_dir(&out.join("frames"))?;
    let table = SemanticTable::standard();
    let scene = generate_scene(cfg.synth.scene_seed, &cfg.scene)?;
    let trajectory = generate_trajectory(&scene, cfg.synth.frames, cfg.synth.trajectory_seed);
    let dataset = make_dataset(&scene, &trajectory, &cfg.dataset)?;
    let mut frames: Vec<(Frame, Split)> = dataset.frames.into_iter().zip(dataset.splits).collect();

    let unseen_seed = mix_seed(cfg.synth.scene_seed, 1);
    if cfg.synth.unseen_frames > 0 {
        let unseen = generate_scene(unseen_seed, &cfg.scene)?;
        let poses = generate_trajectory(&unseen, cfg.synth.unseen_frames, cfg.synth.trajectory_seed);
        for pose in poses {
            let id = frames.len() as u32;
            frames.push((record_frame(&unseen, pose, id, &cfg.dataset, &table)?, Split::TestUnseen));
        }
    }

    let mut entries = Vec::with_capacity(frames.len());
    for (frame, split) in &frames {
        let file = frame_file(frame.id);
        let bytes = encode_frame(frame)?;
        std::fs::write(out.join(&file), &bytes).map_err(io_err(&out.join(&file)))?;
        entries.push(ManifestFrame { id: frame.id, split: *split, file, sha256: sha256_hex(&bytes), labels: None, labels_sha256: None });
    }
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        scene_seed: cfg.synth.scene_seed,
        unseen_scene_seed: unseen_seed,
        scene_config_sha256: toml_digest(&cfg.scene)?,
        sample_rate: frames[0].0.sample_rate,
        accumulation_window: frames[0].0.accumulation_window,
        color_bins: COLOR_BINS,
        frames: entries,
    };
    write_manifest(&out.join(MANIFEST), &manifest)?;
    write_config_snapshot(out, &cfg)?;
    println!("wrote {} frames to {}", frames.len(), out.display());
    Ok(())
}

fn load_dataset(data: &Path) -> Result<DatasetManifest> {
    let manifest = read_manifest(&data.join(MANIFEST))?;
    manifest.verify(data)?;
    Ok(manifest)
}

pub fn label(data: &Path) -> Result<()> {
    let cfg = resolve_config(None, Some(data))?;
    let mut manifest = load_dataset(data)?;
    create_dir(&data.join("labels"))?;
    let calibration = TraversabilityCalibration::standard();
    let mut scores = Vec::new();
    for entry in &mut manifest.frames {
        let frame = read_frame(&data.join(&entry.file))?;
        let labels = label_frame(&frame, &cfg.label, &calibration)?;
        let file = label_file(entry.id);
        let bytes = encode_labels(&labels)?;
        std::fs::write(data.join(&file), &bytes).map_err(io_err(&data.join(&file)))?;
        entry.labels = Some(file);
        entry.labels_sha256 = Some(sha256_hex(&bytes));
        scores.push((entry.id, labels.traversability));
    }
    write_manifest(&data.join(MANIFEST), &manifest)?;
    write_text(&data.join("traversability.csv"), &traversability_csv(&scores))?;
    println!("labeled {} frames", scores.len());
    Ok(())
}

fn load_labeled(data: &Path, manifest: &DatasetManifest, ids: &[u32]) -> Result<Vec<(Frame, LabeledFrame)>> {
    ids.iter()
        .map(|&id| {
            let entry = manifest.frame(id).expect("id taken from the manifest");
            let labels = entry
                .labels
                .as_ref()
                .ok_or_else(|| Error::Input(format!("frame {id} is not labeled; run `label` first")))?;
            Ok((read_frame(&data.join(&entry.file))?, read_labels(&data.join(labels))?))
        })
        .collect()
}

pub fn train(data: &Path, out: &Path, config: Option<&Path>, seed: Option<u64>, epochs: Option<usize>) -> Result<()> {
    let mut cfg = resolve_config(config, Some(data))?;
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    if let Some(e) = epochs {
        cfg.train.epochs = e;
    }
    cfg.validate()?;
    let manifest = load_dataset(data)?;
    let prepare = |split: Split| -> Result<Vec<TrainingFrame<f32>>> {
        load_labeled(data, &manifest, &manifest.ids(split))?
            .iter()
            .map(|(f, l)| TrainingFrame::from_labeled(f, l, &cfg.audio))
            .collect()
    };
    let (train_frames, val_frames) = (prepare(Split::Train)?, prepare(Split::Val)?);
    let (model, report) = fit::<f32>(&cfg.model, &train_frames, &val_frames, &cfg.train)?;
    create_dir(out)?;
    save_checkpoint(&out.join("model.wfld"), &model)?;
    write_text(&out.join("loss_log.csv"), &loss_log_csv(&report.steps))?;
    write_config_snapshot(out, &cfg)?;
    let last = report.epochs.last().map_or(f64::NAN, |l| l.total);
    println!("trained {} steps, final epoch loss {last}", report.steps.len());
    Ok(())
}

pub fn eval(data: &Path, checkpoint: Option<&Path>, out: &Path, split: SplitChoice, ground_truth: bool) -> Result<()> {
    let cfg = resolve_config(None, Some(data))?;
    let manifest = load_dataset(data)?;
    let model: Option<FieldModel<f32>> = match (checkpoint, ground_truth) {
        (_, true) => None,
        (Some(p), false) => Some(load_checkpoint(p)?),
        (None, false) => return Err(Error::Config("eval needs --checkpoint or --ground-truth".into())),
    };
    let splits: &[(Split, &str)] = match split {
        SplitChoice::Seen => &[(Split::TestSeen, "seen")],
        SplitChoice::Unseen => &[(Split::TestUnseen, "unseen")],
        SplitChoice::All => &[(Split::TestSeen, "seen"), (Split::TestUnseen, "unseen")],
    };
    create_dir(out)?;
    let table = SemanticTable::standard();
    for &(s, name) in splits {
        let ids = manifest.ids(s);
        let labeled = load_labeled(data, &manifest, &ids)?;
        let frames: Vec<EvalFrame> = labeled.iter().map(|(_, l)| EvalFrame { samples: l.samples.clone() }).collect();
        let inputs = labeled
            .iter()
            .map(|(f, _)| FrameInput::<f32>::from_frame(f, &cfg.audio))
            .collect::<Result<Vec<_>>>()?;
        let gt;
        let mp;
        let predictor: &dyn FieldPredictor = match &model {
            Some(m) => {
                mp = ModelPredictor::new(m, &inputs.iter().collect::<Vec<_>>())?;
                &mp
            }
            None => {
                gt = GroundTruthPredictor {
                    n_classes: table.len(),
                    color_bins: COLOR_BINS,
                    traversability: labeled.iter().map(|(_, l)| l.traversability).collect(),
                };
                &gt
            }
        };
        let opts = EvalOptions {
            pool: cfg.eval.pool,
            seed: cfg.eval.seed,
            n_classes: model.as_ref().map_or(table.len(), |m| m.config().n_classes),
            heads: cfg.train.heads,
        };
        let report = evaluate(predictor, &frames, &opts)?;
        write_text(&out.join(format!("eval_{name}.txt")), &eval_report_text(&report))?;
        write_text(&out.join(format!("eval_{name}.csv")), &eval_report_csv(&report, &ids))?;
        println!("{name}: {} frames, {} samples", ids.len(), report.n_samples_used);
    }
    write_config_snapshot(out, &cfg)?;
    Ok(())
}

struct Observed {
    model: FieldModel<f32>,
    frame: Frame,
    cfg: PipelineConfig,
}

fn observe(checkpoint: &Path, frame: &Path, config: Option<&Path>) -> Result<Observed> {
    let model: FieldModel<f32> = load_checkpoint(checkpoint)?;
    let cfg = resolve_config(config, checkpoint.parent())?;
    Ok(Observed { model, frame: read_frame(frame)?, cfg })
}

fn lattice_levels() -> usize {
    ((LATTICE_BELOW + LATTICE_ABOVE) / LATTICE_DZ).round() as usize + 1
}

pub fn plan(
    checkpoint: &Path,
    frame: &Path,
    start: (f64, f64),
    goal: (f64, f64),
    out: &Path,
    config: Option<&Path>,
    planner: Planner,
) -> Result<()> {
    let Observed { model, frame, cfg } = observe(checkpoint, frame, config)?;
    let nav = &cfg.nav;
    let center = ((start.0 + goal.0) / 2.0, (start.1 + goal.1) / 2.0);
    let half = ((start.0 - goal.0).abs().max((start.1 - goal.1).abs()) / 2.0 + 1.0).max(1.0);
    let spec = planner_grid(center.0, center.1, half, nav.cell_size)?;
    let cell = |(x, y): (f64, f64), what: &str| {
        spec.cell_at(x, y).ok_or_else(|| Error::Input(format!("{what} ({x}, {y}) outside the planner grid")))
    };
    let (s, g) = (cell(start, "start")?, cell(goal, "goal")?);
    let z = frame.pose.position.z;
    let features = model.encode_frame(&FrameInput::from_frame(&frame, &cfg.audio)?)?;
    let lattice = field_lattice(&spec, z - LATTICE_BELOW, z + LATTICE_ABOVE, lattice_levels());
    let field = query_grid(&model, &features, lattice)?;
    let table = SemanticTable::standard();
    let ground_level = z - LATTICE_BELOW;
    let grids = project_field_to_grids(&field, &spec, table.null_index(), ground_level)?;
    let costmap: Costmap = match planner {
        Planner::Full => {
            let robot = spec.cell_at(frame.pose.position.x, frame.pose.position.y).unwrap_or(s);
            full_costmap(&grids.semantic, features.traversability, robot, &table, nav)?
        }
        Planner::Semantic => semantic_costmap(&grids.semantic, &table, nav)?,
        Planner::Elevation => {
            let ground = ground_from_min_filter(&grids.elevation, GROUND_RADIUS);
            elevation_costmap(&grids.elevation, &ground, nav)?
        }
    };
    create_dir(out)?;
    let k = nav.k.max(1e-9);
    write_pgm(&out.join("costmap.pgm"), &costmap.cost.map(|c| -c), -(1.0 + k), -1.0)?;
    write_text(&out.join("costmap.csv"), &costmap_csv(&costmap.cost))?;
    write_config_snapshot(out, &cfg)?;
    let path = if costmap.passable(s) && costmap.passable(g) { a_star(&costmap, s, g)? } else { None };
    match path {
        Some(p) => {
            write_text(&out.join("path.csv"), &path_csv(&p.cells, &replay_cost(&costmap, &p.cells)?))?;
            println!("path of {} cells, cost {}", p.cells.len(), p.total_cost);
        }
        None => {
            write_text(&out.join("path.csv"), &path_csv(&[], &[]))?;
            println!("no path");
        }
    }
    Ok(())
}

pub fn export(checkpoint: &Path, frame: &Path, out: &Path, config: Option<&Path>) -> Result<()> {
    let Observed { model, frame, cfg } = observe(checkpoint, frame, config)?;
    let [nx, ny, nz] = cfg.export.resolution;
    let p = frame.pose.position;
    let extent = 6.0;
    let cell_size = extent / nx.max(ny) as f64;
    let spec = GridSpec {
        origin: Point3::new(p.x - nx as f64 * cell_size / 2.0, p.y - ny as f64 * cell_size / 2.0, 0.0),
        cell_size,
        width: nx,
        height: ny,
    };
    let features = model.encode_frame(&FrameInput::from_frame(&frame, &cfg.audio)?)?;
    let lattice = field_lattice(&spec, p.z - LATTICE_BELOW, p.z + LATTICE_ABOVE, nz);
    let field = query_grid(&model, &features, lattice)?;
    create_dir(out)?;
    write_ply(&out.join("field.ply"), &field_point_cloud(&field))?;

    let dz = (LATTICE_BELOW + LATTICE_ABOVE) / (nz - 1) as f64;
    let k = (((cfg.export.slice_z + LATTICE_BELOW) / dz).round().max(0.0) as usize).min(nz - 1);
    let slice = |value: &dyn Fn(usize) -> f64| -> Result<Grid<f64>> {
        let rows = field_slice(&field, k, value)?;
        Ok(Grid::from_fn(spec, |(r, c)| rows[r][c]))
    };
    let s_max = model.config().s_max;
    write_pgm(&out.join("sdf_slice.pgm"), &slice(&|i| field.predictions[i].sdf)?, -s_max, s_max)?;
    write_pgm(&out.join("confidence.pgm"), &slice(&|i| field.predictions[i].confidence)?, 0.0, 1.0)?;

    let table = SemanticTable::standard();
    let grids = project_field_to_grids(&field, &spec, table.null_index(), p.z - LATTICE_BELOW)?;
    let robot = spec.cell_at(p.x, p.y).unwrap_or((ny / 2, nx / 2));
    let weight = gaussian_weight(&spec, robot, cfg.nav.variance)?;
    let t = pixel_traversability(&semantic_mask(&grids.semantic, &table)?, &weight, features.traversability.clamp(0.0, 1.0), cfg.nav.blend)?;
    write_pgm(&out.join("traversability.pgm"), &t, 0.0, 1.0)?;
    write_config_snapshot(out, &cfg)?;
    println!("exported field of {} points around {:?}", field.points.len(), PathBuf::from(out));
    Ok(())
}
