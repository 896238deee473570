use std::path::Path;

use super::image::{build_scene, scene_svg, ImageOptions};
use super::{PlotSpec, ISLAND_ID, ISLAND_VERSION};
use crate::error::{Error, Result};

/// Id of the container the interactive renderer draws into.
pub const RENDERER_ELEMENT_ID: &str = "chronoseries-chart";

const BOOTSTRAP: &str = r#"(function () {
  var node = document.getElementById("chronoseries-data");
  var island = null;
  try { island = JSON.parse(node.textContent); } catch (e) {}
  if (island && island.version === "__VERSION__") { return; }
  var banner = document.createElement("div");
  banner.className = "cs-banner";
  banner.textContent = "Unsupported plot data version: " + (island ? island.version : "unreadable");
  document.body.insertBefore(banner, document.body.firstChild);
})();"#;

const STYLE: &str = "body{font-family:sans-serif;margin:16px;color:#222}\
h1{font-size:16px;font-weight:normal}\
.cs-banner{background:#fdd;border:1px solid #c33;padding:6px;margin-bottom:8px}\
#chronoseries-chart svg{max-width:100%;height:auto}";

/// Self-contained HTML page with the data island, a static SVG fallback
/// and the built-in bootstrap script.
pub fn to_html(spec: &PlotSpec, title: &str) -> Result<String> {
    to_html_with(spec, title, None)
}

/// Like [`to_html`], inlining `renderer` as the page script when given.
pub fn to_html_with(spec: &PlotSpec, title: &str, renderer: Option<&str>) -> Result<String> {
    let island = spec.island_json()?.replace('<', "\\u003c");
    let svg = scene_svg(&build_scene(spec, &ImageOptions::default())?, false);
    let script = match renderer {
        Some(js) => escape_script(js),
        None => BOOTSTRAP.replace("__VERSION__", ISLAND_VERSION),
    };
    let title = escape_text(title);
    Ok(format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{title}</title>\n\
         <style>{STYLE}</style>\n</head>\n<body>\n<h1>{title}</h1>\n\
         <div id=\"{RENDERER_ELEMENT_ID}\">\n{svg}</div>\n\
         <script type=\"application/json\" id=\"{ISLAND_ID}\">{island}</script>\n\
         <script>\n{script}\n</script>\n</body>\n</html>\n"
    ))
}

/// Writes [`to_html`] output to `path`.
pub fn render_html(spec: &PlotSpec, title: &str, path: impl AsRef<Path>) -> Result<()> {
    render_html_with(spec, title, None, path)
}

pub fn render_html_with(spec: &PlotSpec, title: &str, renderer: Option<&str>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_html_with(spec, title, renderer)?).map_err(|e| Error::io(path, e))
}

/// Keeps an inline script from closing its own element.
fn escape_script(text: &str) -> String {
    text.replace("</", "<\\/")
}

pub(super) fn escape_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}
