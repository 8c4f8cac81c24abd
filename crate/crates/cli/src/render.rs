use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use carpet_core::blowup::{CarpetStage, ExtendedPoint};
use carpet_core::rng::stream_rng;
use carpet_core::specification::LocalSaddle;
use carpet_core::sphere::{branch_points, local_displacement, project};
use carpet_core::toral::{ToralAutomorphism, TorusPoint};
use image::{Rgba, RgbaImage};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::run::{resolve, RunDir};
use crate::Outcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Png,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The fundamental half-domain `[0, 1/2] x [0, 1]` of the sphere.
    Domain,
    /// Linear saddle near a blown orbit point, before and after the blow-up.
    PhasePortrait,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PortraitConfig {
    /// Blown orbit whose point 0 is drawn.
    pub orbit: usize,
    /// Half-width of each panel in multiples of the collar radius.
    pub window: f64,
    /// Invariant hyperbolas per quadrant.
    pub curves: usize,
}

impl Default for PortraitConfig {
    fn default() -> Self {
        Self {
            orbit: 0,
            window: 1.5,
            curves: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    /// Stage document written by `build`; without one the depth-0 sphere of
    /// `matrix` is drawn.
    pub stage: Option<PathBuf>,
    pub matrix: ToralAutomorphism,
    pub mode: Mode,
    pub format: Format,
    /// Image height in pixels.
    pub size: u32,
    /// Random orbits drawn on top, coloured by time.
    pub trajectories: usize,
    pub steps: usize,
    pub portrait: PortraitConfig,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            stage: None,
            matrix: ToralAutomorphism::cat_map(),
            mode: Mode::Domain,
            format: Format::Png,
            size: 512,
            trajectories: 0,
            steps: 200,
            portrait: PortraitConfig::default(),
        }
    }
}

type Rgb = [u8; 3];

const BACKGROUND: Rgb = [255, 255, 255];
const CARPET: Rgb = [214, 220, 229];
const RIM: Rgb = [38, 38, 46];
const BRANCH: Rgb = [200, 30, 30];
const STABLE: Rgb = [30, 90, 200];
const UNSTABLE: Rgb = [210, 80, 20];
/// Edges of the half-domain: `x = 0` and `x = 1/2` fold onto themselves,
/// `y = 0` is glued to `y = 1`.
const EDGE_LEFT: Rgb = [40, 120, 200];
const EDGE_RIGHT: Rgb = [230, 140, 20];
const EDGE_TOP: Rgb = [40, 160, 80];

/// Viridis sampled at eight points; time runs from the first colour to the last.
const RAMP: [Rgb; 8] = [
    [68, 1, 84],
    [70, 50, 127],
    [54, 92, 141],
    [39, 127, 142],
    [31, 161, 135],
    [74, 194, 109],
    [159, 218, 58],
    [253, 231, 37],
];

pub fn ramp(t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (t.floor() as usize).min(RAMP.len() - 2);
    let f = t - i as f64;
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    [
        mix(RAMP[i][0], RAMP[i + 1][0]),
        mix(RAMP[i][1], RAMP[i + 1][1]),
        mix(RAMP[i][2], RAMP[i + 1][2]),
    ]
}

/// Drawing primitives in world coordinates, `y` pointing up.
#[derive(Clone, Debug)]
enum Shape {
    Disc { c: [f64; 2], r: f64, fill: Rgb },
    Ring { c: [f64; 2], r: f64, stroke: Rgb },
    Line { a: [f64; 2], b: [f64; 2], stroke: Rgb },
    Dot { c: [f64; 2], stroke: Rgb },
    Label { at: [f64; 2], text: String },
}

/// One rectangular panel showing `[x0, x1] x [y0, y1]`.
#[derive(Clone, Debug)]
struct Panel {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    fill: Rgb,
    shapes: Vec<Shape>,
}

/// Panels laid out left to right, each `height` pixels tall.
struct Scene {
    height: u32,
    panels: Vec<Panel>,
}

impl Panel {
    fn width_px(&self, height: u32) -> u32 {
        ((self.x1 - self.x0) / (self.y1 - self.y0) * height as f64).round() as u32
    }
}

fn put(img: &mut RgbaImage, x: i64, y: i64, c: Rgb, left: u32, width: u32) {
    if x >= 0 && (x as u32) < width && y >= 0 && (y as u32) < img.height() {
        img.put_pixel(left + x as u32, y as u32, Rgba([c[0], c[1], c[2], 255]));
    }
}

impl Scene {
    fn png(&self) -> RgbaImage {
        let widths: Vec<u32> = self.panels.iter().map(|p| p.width_px(self.height)).collect();
        let mut img = RgbaImage::new(widths.iter().sum::<u32>().max(1), self.height.max(1));
        let mut left = 0;
        for (panel, &w) in self.panels.iter().zip(&widths) {
            let h = self.height;
            let scale = h as f64 / (panel.y1 - panel.y0);
            let to_px = |p: [f64; 2]| ((p[0] - panel.x0) * scale, (panel.y1 - p[1]) * scale);
            for y in 0..h {
                for x in 0..w {
                    let f = panel.fill;
                    img.put_pixel(left + x, y, Rgba([f[0], f[1], f[2], 255]));
                }
            }
            for shape in &panel.shapes {
                match shape {
                    Shape::Disc { c, r, fill } | Shape::Ring { c, r, stroke: fill } => {
                        let ring = matches!(shape, Shape::Ring { .. });
                        let (cx, cy) = to_px(*c);
                        let rp = r * scale;
                        let reach = rp + 1.0;
                        let (xa, xb) = ((cx - reach).floor() as i64, (cx + reach).ceil() as i64);
                        let (ya, yb) = ((cy - reach).floor() as i64, (cy + reach).ceil() as i64);
                        for py in ya.max(0)..=yb.min(h as i64 - 1) {
                            for px in xa.max(0)..=xb.min(w as i64 - 1) {
                                let d = (px as f64 + 0.5 - cx).hypot(py as f64 + 0.5 - cy);
                                let hit = if ring { (d - rp).abs() <= 0.75 } else { d <= rp };
                                if hit {
                                    put(&mut img, px, py, *fill, left, w);
                                }
                            }
                        }
                    }
                    Shape::Line { a, b, stroke } => {
                        let (ax, ay) = to_px(*a);
                        let (bx, by) = to_px(*b);
                        let n = (bx - ax).abs().max((by - ay).abs()).ceil().max(1.0) as usize;
                        for i in 0..=n {
                            let t = i as f64 / n as f64;
                            let x = (ax + t * (bx - ax)).floor() as i64;
                            let y = (ay + t * (by - ay)).floor() as i64;
                            put(&mut img, x, y, *stroke, left, w);
                        }
                    }
                    Shape::Dot { c, stroke } => {
                        let (x, y) = to_px(*c);
                        let (x, y) = (x.floor() as i64, y.floor() as i64);
                        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                            put(&mut img, x + dx - 1, y + dy - 1, *stroke, left, w);
                        }
                    }
                    Shape::Label { .. } => {}
                }
            }
            left += w;
        }
        img
    }

    fn svg(&self) -> String {
        let widths: Vec<u32> = self.panels.iter().map(|p| p.width_px(self.height)).collect();
        let total: u32 = widths.iter().sum();
        let h = self.height;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{h}" viewBox="0 0 {total} {h}">"#
        );
        let hex = |c: &Rgb| format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2]);
        let mut left = 0.0;
        for (k, (panel, &w)) in self.panels.iter().zip(&widths).enumerate() {
            let scale = h as f64 / (panel.y1 - panel.y0);
            let px = |p: [f64; 2]| (left + (p[0] - panel.x0) * scale, (panel.y1 - p[1]) * scale);
            let _ = writeln!(
                s,
                r#"<clipPath id="panel{k}"><rect x="{left:.3}" y="0" width="{w}" height="{h}"/></clipPath>"#
            );
            let _ = writeln!(s, r#"<g clip-path="url(#panel{k})">"#);
            let _ = writeln!(
                s,
                r#"<rect x="{left:.3}" y="0" width="{w}" height="{h}" fill="{}"/>"#,
                hex(&panel.fill)
            );
            for shape in &panel.shapes {
                match shape {
                    Shape::Disc { c, r, fill } => {
                        let (x, y) = px(*c);
                        let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{:.3}" fill="{}"/>"#, r * scale, hex(fill));
                    }
                    Shape::Ring { c, r, stroke } => {
                        let (x, y) = px(*c);
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{x:.3}" cy="{y:.3}" r="{:.3}" fill="none" stroke="{}" stroke-width="1.2"/>"#,
                            r * scale,
                            hex(stroke)
                        );
                    }
                    Shape::Line { a, b, stroke } => {
                        let ((x1, y1), (x2, y2)) = (px(*a), px(*b));
                        let _ = writeln!(
                            s,
                            r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{}" stroke-width="1"/>"#,
                            hex(stroke)
                        );
                    }
                    Shape::Dot { c, stroke } => {
                        let (x, y) = px(*c);
                        let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="1.5" fill="{}"/>"#, hex(stroke));
                    }
                    Shape::Label { at, text } => {
                        let (x, y) = px(*at);
                        let _ = writeln!(
                            s,
                            r##"<text x="{x:.3}" y="{y:.3}" font-family="sans-serif" font-size="11" fill="#222">{}</text>"##,
                            text.replace('&', "&amp;").replace('<', "&lt;")
                        );
                    }
                }
            }
            let _ = writeln!(s, "</g>");
            left += w as f64;
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Images of a torus disc around `lift` that can meet the half-domain.
fn disc_images(lift: &TorusPoint, r: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for c in [[lift.x, lift.y], [-lift.x, -lift.y]] {
        for i in -1..=1 {
            for j in -1..=1 {
                let p = [c[0] + i as f64, c[1] + j as f64];
                if p[0] > -r && p[0] < 0.5 + r && p[1] > -r && p[1] < 1.0 + r {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Canonical representative in the half-domain.
fn half_domain(p: &ExtendedPoint, stage: &CarpetStage) -> [f64; 2] {
    let s = stage.embed(p);
    [s.rep().x, s.rep().y]
}

fn trajectories(stage: &CarpetStage, count: usize, steps: usize, seed: u64) -> Result<Vec<Vec<ExtendedPoint>>> {
    let mut rng = stream_rng(seed, 2);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let start = stage.uncollapse(&project(&TorusPoint::new(rng.random(), rng.random())));
        let mut orbit = vec![start];
        for _ in 1..steps {
            let next = stage.apply(orbit.last().expect("non-empty"))?;
            orbit.push(next);
        }
        out.push(orbit);
    }
    Ok(out)
}

fn domain_scene(stage: &CarpetStage, cfg: &RenderConfig, seed: u64) -> Result<Scene> {
    let mut shapes = Vec::new();
    for o in stage.blown() {
        for i in 0..o.period() {
            for c in disc_images(o.lift(i), o.radius) {
                shapes.push(Shape::Disc { c, r: o.radius, fill: BACKGROUND });
                shapes.push(Shape::Ring { c, r: o.radius, stroke: RIM });
            }
        }
    }
    for orbit in trajectories(stage, cfg.trajectories, cfg.steps, seed)? {
        let n = orbit.len().max(2) - 1;
        for (t, p) in orbit.iter().enumerate() {
            shapes.push(Shape::Dot { c: half_domain(p, stage), stroke: ramp(t as f64 / n as f64) });
        }
    }
    shapes.push(Shape::Line { a: [0.0, 0.0], b: [0.0, 1.0], stroke: EDGE_LEFT });
    shapes.push(Shape::Line { a: [0.5, 0.0], b: [0.5, 1.0], stroke: EDGE_RIGHT });
    shapes.push(Shape::Line { a: [0.0, 0.0], b: [0.5, 0.0], stroke: EDGE_TOP });
    shapes.push(Shape::Line { a: [0.0, 1.0], b: [0.5, 1.0], stroke: EDGE_TOP });
    for b in branch_points() {
        let f = b.to_f64();
        // (0, 0) also appears at the top corners of the domain
        for y in [f.y, f.y + 1.0] {
            if y <= 1.0 {
                shapes.push(Shape::Disc { c: [f.x, y], r: 0.006, fill: BRANCH });
            }
        }
    }
    shapes.push(Shape::Label { at: [0.01, 0.97], text: "x=0: (0,y)~(0,1-y)".into() });
    shapes.push(Shape::Label { at: [0.26, 0.03], text: "x=1/2: (1/2,y)~(1/2,1-y)".into() });
    shapes.push(Shape::Label { at: [0.01, 0.5], text: "y=0 ~ y=1".into() });
    Ok(Scene {
        height: cfg.size,
        panels: vec![Panel { x0: 0.0, y0: 0.0, x1: 0.5, y1: 1.0, fill: CARPET, shapes }],
    })
}

/// The invariant curves `|p q| = k` of the linear saddle, traced in time so
/// that the colour shows the direction of motion.
fn hyperbolas(saddle: &LocalSaddle, half: f64, per_quadrant: usize) -> Vec<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    for (sp, sq) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        for k in 1..=per_quadrant {
            let level = half * (k as f64 / (per_quadrant + 1) as f64) * 0.8;
            let curve = (0..=400)
                .map(|i| {
                    let tau = -3.0 + 6.0 * i as f64 / 400.0;
                    saddle.from_eigen([sp * level * (-tau).exp(), sq * level * tau.exp()])
                })
                .collect();
            out.push(curve);
        }
    }
    out
}

fn portrait_scene(stage: &CarpetStage, cfg: &RenderConfig) -> Result<Scene> {
    let saddle = LocalSaddle::new(stage, cfg.portrait.orbit)?;
    let half = cfg.portrait.window * saddle.collar();
    let curves = hyperbolas(&saddle, half, cfg.portrait.curves.max(1));
    let axis = |t: f64| [t.cos() * 2.0 * half, t.sin() * 2.0 * half];
    let theta_s = saddle.stable_angle();
    let u = saddle.from_eigen([0.0, 1.0]);
    let theta_u = u[1].atan2(u[0]);

    // before: the sphere around the orbit point
    let mut before = Vec::new();
    for curve in &curves {
        push_curve(&mut before, curve, 1.5 * half, half);
    }
    for (t, c) in [(theta_s, STABLE), (theta_u, UNSTABLE)] {
        let a = axis(t);
        before.push(Shape::Line { a: [-a[0], -a[1]], b: a, stroke: c });
    }
    before.push(Shape::Disc { c: [0.0, 0.0], r: half * 0.02, fill: RIM });
    before.push(Shape::Label { at: [-0.95 * half, 0.9 * half], text: "before".into() });

    // after: the same curves pushed through the inverse collapse
    let to_stage = |z: [f64; 2]| -> [f64; 2] {
        let p = saddle.point_at(stage, z);
        local_displacement(saddle.centre(), &stage.embed(&p))
    };
    let mut after = Vec::new();
    for o in stage.blown() {
        for i in 0..o.period() {
            let v = local_displacement(saddle.centre(), &o.charts[i].center);
            if v[0].hypot(v[1]) < 2.0 * half + o.radius {
                after.push(Shape::Disc { c: v, r: o.radius, fill: BACKGROUND });
                after.push(Shape::Ring { c: v, r: o.radius, stroke: RIM });
            }
        }
    }
    for curve in &curves {
        let mapped: Vec<[f64; 2]> = curve
            .iter()
            .map(|&z| if z[0].hypot(z[1]) <= 1.5 * half { to_stage(z) } else { [f64::INFINITY; 2] })
            .collect();
        push_curve(&mut after, &mapped, 1.5 * half, 0.2 * half);
    }
    for (t, c) in [(theta_s, STABLE), (theta_u, UNSTABLE)] {
        for side in [0.0, std::f64::consts::PI] {
            let dir = [(t + side).cos(), (t + side).sin()];
            let r = saddle.radius();
            after.push(Shape::Line { a: [dir[0] * r, dir[1] * r], b: [dir[0] * 2.0 * half, dir[1] * 2.0 * half], stroke: c });
            after.push(Shape::Disc { c: [dir[0] * r, dir[1] * r], r: half * 0.025, fill: c });
        }
    }
    after.push(Shape::Label { at: [-0.95 * half, 0.9 * half], text: "after".into() });

    let panel = |shapes| Panel { x0: -half, y0: -half, x1: half, y1: half, fill: CARPET, shapes };
    Ok(Scene {
        height: cfg.size,
        panels: vec![panel(before), panel(after)],
    })
}

/// Polyline coloured along its length. Points beyond `reach` are dropped and
/// steps longer than `jump` are not joined.
fn push_curve(shapes: &mut Vec<Shape>, curve: &[[f64; 2]], reach: f64, jump: f64) {
    let n = curve.len().max(2) - 1;
    for (i, w) in curve.windows(2).enumerate() {
        let inside = w.iter().all(|p| p[0].hypot(p[1]) <= reach);
        if inside && (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]) <= jump {
            shapes.push(Shape::Line { a: w[0], b: w[1], stroke: ramp(i as f64 / n as f64) });
        }
    }
}

/// Render bytes and the file name for a config.
pub fn render(stage: &CarpetStage, cfg: &RenderConfig, seed: u64) -> Result<(String, Vec<u8>)> {
    if cfg.size < 16 || cfg.size > 8192 {
        anyhow::bail!("field `size`: must be within 16..=8192, got {}", cfg.size);
    }
    let scene = match cfg.mode {
        Mode::Domain => domain_scene(stage, cfg, seed)?,
        Mode::PhasePortrait => portrait_scene(stage, cfg)?,
    };
    match cfg.format {
        Format::Svg => Ok(("render.svg".into(), scene.svg().into_bytes())),
        Format::Png => {
            let mut bytes = Vec::new();
            scene
                .png()
                .write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)?;
            Ok(("render.png".into(), bytes))
        }
    }
}

pub fn run(config: Option<&Path>, seed: u64, out: &Path) -> Result<Outcome> {
    let cfg: RenderConfig = crate::config::load(config)?;
    crate::config::check_matrix(&cfg.matrix)?;
    let stage = match &cfg.stage {
        Some(p) => {
            let path = resolve(config, p);
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("field `stage`: reading {}", path.display()))?;
            CarpetStage::from_json(&text)?
        }
        None => CarpetStage::base(cfg.matrix),
    };
    let dir = RunDir::create(out, "render", &cfg, seed)?;
    let (name, bytes) = render(&stage, &cfg, seed)?;
    dir.write(&name, &bytes)?;
    Ok(Outcome {
        passed: true,
        summary: format!("wrote {name} ({} bytes) for a depth-{} stage", bytes.len(), stage.depth()),
    })
}
