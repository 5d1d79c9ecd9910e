//! Fixture builders and a scripted in-process HTTP server, shared by this
//! crate's tests, the CLI integration tests, and the benchmarks.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use crate::maven::{MavenCoordinate, Scope};

/// Declarative descriptor fixture; rendered to XML by [`pom_document`].
#[derive(Debug, Clone)]
pub struct PomSpec {
    pub coordinate: MavenCoordinate,
    pub packaging: Option<String>,
    pub parent: Option<MavenCoordinate>,
    pub properties: Vec<(String, String)>,
    pub deps: Vec<DepSpec>,
    pub managed: Vec<DepSpec>,
}

#[derive(Debug, Clone)]
pub struct DepSpec {
    pub coordinate: MavenCoordinate,
    pub scope: Option<String>,
    pub optional: bool,
    pub exclusions: Vec<(String, String)>,
}

impl PomSpec {
    pub fn new(coordinate: &str) -> PomSpec {
        PomSpec {
            coordinate: MavenCoordinate::parse(coordinate).expect("fixture coordinate"),
            packaging: None,
            parent: None,
            properties: Vec::new(),
            deps: Vec::new(),
            managed: Vec::new(),
        }
    }

    pub fn packaging(mut self, packaging: &str) -> PomSpec {
        self.packaging = Some(packaging.to_string());
        self
    }

    pub fn property(mut self, name: &str, value: &str) -> PomSpec {
        self.properties.push((name.to_string(), value.to_string()));
        self
    }

    fn push_dep(mut self, dep: DepSpec) -> PomSpec {
        self.deps.push(dep);
        self
    }

    /// `scope` empty means no scope element (defaults to compile).
    pub fn dep(self, coordinate: &str, scope: &str) -> PomSpec {
        self.push_dep(DepSpec {
            coordinate: MavenCoordinate::parse(coordinate).expect("fixture coordinate"),
            scope: if scope.is_empty() {
                None
            } else {
                Some(scope.to_string())
            },
            optional: false,
            exclusions: Vec::new(),
        })
    }

    pub fn dep_scoped(self, coordinate: &str, scope: Scope) -> PomSpec {
        self.dep(coordinate, scope.as_str())
    }

    pub fn dep_optional(self, coordinate: &str) -> PomSpec {
        self.push_dep(DepSpec {
            coordinate: MavenCoordinate::parse(coordinate).expect("fixture coordinate"),
            scope: None,
            optional: true,
            exclusions: Vec::new(),
        })
    }

    pub fn dep_excluding(self, coordinate: &str, exclusions: &[(&str, &str)]) -> PomSpec {
        self.push_dep(DepSpec {
            coordinate: MavenCoordinate::parse(coordinate).expect("fixture coordinate"),
            scope: None,
            optional: false,
            exclusions: exclusions
                .iter()
                .map(|(g, a)| (g.to_string(), a.to_string()))
                .collect(),
        })
    }

    pub fn dep_unversioned(self, coordinate: &str) -> PomSpec {
        self.dep(coordinate, "")
    }

    pub fn managed_dep(mut self, coordinate: &str, scope: &str) -> PomSpec {
        self.managed.push(DepSpec {
            coordinate: MavenCoordinate::parse(coordinate).expect("fixture coordinate"),
            scope: if scope.is_empty() {
                None
            } else {
                Some(scope.to_string())
            },
            optional: false,
            exclusions: Vec::new(),
        });
        self
    }
}

fn render_dep(out: &mut String, dep: &DepSpec) {
    out.push_str("    <dependency>\n");
    out.push_str(&format!("      <groupId>{}</groupId>\n", dep.coordinate.group));
    out.push_str(&format!(
        "      <artifactId>{}</artifactId>\n",
        dep.coordinate.artifact
    ));
    if !dep.coordinate.version.is_empty() {
        out.push_str(&format!(
            "      <version>{}</version>\n",
            dep.coordinate.version
        ));
    }
    if let Some(scope) = &dep.scope {
        out.push_str(&format!("      <scope>{scope}</scope>\n"));
    }
    if dep.optional {
        out.push_str("      <optional>true</optional>\n");
    }
    if !dep.exclusions.is_empty() {
        out.push_str("      <exclusions>\n");
        for (group, artifact) in &dep.exclusions {
            out.push_str(&format!(
                "        <exclusion><groupId>{group}</groupId><artifactId>{artifact}</artifactId></exclusion>\n"
            ));
        }
        out.push_str("      </exclusions>\n");
    }
    out.push_str("    </dependency>\n");
}

pub fn pom_document(spec: &PomSpec) -> String {
    let mut out = String::from("<project>\n");
    if let Some(parent) = &spec.parent {
        out.push_str(&format!(
            "  <parent><groupId>{}</groupId><artifactId>{}</artifactId><version>{}</version></parent>\n",
            parent.group, parent.artifact, parent.version
        ));
    }
    out.push_str(&format!("  <groupId>{}</groupId>\n", spec.coordinate.group));
    out.push_str(&format!(
        "  <artifactId>{}</artifactId>\n",
        spec.coordinate.artifact
    ));
    out.push_str(&format!("  <version>{}</version>\n", spec.coordinate.version));
    if let Some(packaging) = &spec.packaging {
        out.push_str(&format!("  <packaging>{packaging}</packaging>\n"));
    }
    if !spec.properties.is_empty() {
        out.push_str("  <properties>\n");
        for (name, value) in &spec.properties {
            out.push_str(&format!("    <{name}>{value}</{name}>\n"));
        }
        out.push_str("  </properties>\n");
    }
    if !spec.managed.is_empty() {
        out.push_str("  <dependencyManagement>\n  <dependencies>\n");
        for dep in &spec.managed {
            render_dep(&mut out, dep);
        }
        out.push_str("  </dependencies>\n  </dependencyManagement>\n");
    }
    if !spec.deps.is_empty() {
        out.push_str("  <dependencies>\n");
        for dep in &spec.deps {
            render_dep(&mut out, dep);
        }
        out.push_str("  </dependencies>\n");
    }
    out.push_str("</project>\n");
    out
}

/// Repository fixture modeled on the dependency closure of the Android
/// sdk-common 22.9.0 library: twelve artifacts across twelve groups.
pub fn sdk_common_fixture() -> Vec<(MavenCoordinate, String)> {
    let specs = vec![
        PomSpec::new("com.android.tools:sdk-common:22.9.0")
            .dep("com.android.tools.ddms:ddmlib:22.9.0", "")
            .dep("com.android.tools.layoutlib:layoutlib-api:22.9.0", "")
            .dep("com.google.guava:guava:13.0.1", "")
            .dep("org.apache.httpcomponents:httpclient:4.1.1", "")
            .dep("org.apache.commons:commons-compress:1.0", "")
            .dep("org.bouncycastle:bcprov-jdk15on:1.48", ""),
        PomSpec::new("com.android.tools.ddms:ddmlib:22.9.0")
            .dep("net.sf.kxml:kxml2:2.3.0", "")
            .dep("com.intellij:annotations:12.0", ""),
        PomSpec::new("com.android.tools.layoutlib:layoutlib-api:22.9.0"),
        PomSpec::new("net.sf.kxml:kxml2:2.3.0"),
        PomSpec::new("com.google.guava:guava:13.0.1")
            .dep("com.google.code.findbugs:jsr305:1.3.9", ""),
        PomSpec::new("com.google.code.findbugs:jsr305:1.3.9"),
        PomSpec::new("org.apache.httpcomponents:httpclient:4.1.1")
            .dep("commons-logging:commons-logging:1.1.1", "")
            .dep("commons-codec:commons-codec:1.4", ""),
        PomSpec::new("commons-logging:commons-logging:1.1.1"),
        PomSpec::new("commons-codec:commons-codec:1.4"),
        PomSpec::new("org.apache.commons:commons-compress:1.0"),
        PomSpec::new("org.bouncycastle:bcprov-jdk15on:1.48"),
        PomSpec::new("com.intellij:annotations:12.0"),
    ];
    specs
        .into_iter()
        .map(|spec| {
            let document = pom_document(&spec);
            (spec.coordinate, document)
        })
        .collect()
}

/// Lays POM documents out in the standard repository directory structure so
/// the tree under `root` can back a file repository or a static HTTP server.
pub fn write_file_repository(
    root: &Path,
    poms: &[(MavenCoordinate, String)],
) -> std::io::Result<()> {
    for (coordinate, document) in poms {
        let mut dir = root.to_path_buf();
        for segment in coordinate.group.split('.') {
            dir.push(segment);
        }
        dir.push(&coordinate.artifact);
        dir.push(&coordinate.version);
        std::fs::create_dir_all(&dir)?;
        let file = dir.join(format!("{}-{}.pom", coordinate.artifact, coordinate.version));
        std::fs::write(file, document)?;
    }
    Ok(())
}

/// One canned HTTP response.
#[derive(Debug, Clone)]
pub struct CannedResponse {
    pub status: u16,
    pub body: Vec<u8>,
    pub content_type: &'static str,
}

impl CannedResponse {
    pub fn ok(body: impl Into<Vec<u8>>) -> CannedResponse {
        CannedResponse {
            status: 200,
            body: body.into(),
            content_type: "text/plain",
        }
    }

    pub fn html(body: impl Into<Vec<u8>>) -> CannedResponse {
        CannedResponse {
            status: 200,
            body: body.into(),
            content_type: "text/html",
        }
    }

    pub fn xml(body: impl Into<Vec<u8>>) -> CannedResponse {
        CannedResponse {
            status: 200,
            body: body.into(),
            content_type: "application/xml",
        }
    }

    pub fn status(status: u16) -> CannedResponse {
        CannedResponse {
            status,
            body: format!("status {status}").into_bytes(),
            content_type: "text/plain",
        }
    }
}

#[derive(Default)]
struct ServerState {
    // Per-path response scripts; the last entry keeps answering once the
    // script is exhausted.
    routes: HashMap<String, Vec<CannedResponse>>,
    hits: HashMap<String, usize>,
}

/// Minimal blocking HTTP server for fixtures. Each registered path serves
/// its scripted responses in order (500, 500, 200, ...); unknown paths get
/// a 404. Hit counts are recorded per path so tests can assert cache
/// behavior.
pub struct ScriptedServer {
    addr: SocketAddr,
    state: Arc<Mutex<ServerState>>,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl ScriptedServer {
    pub fn start(routes: Vec<(String, Vec<CannedResponse>)>) -> ScriptedServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind fixture server");
        let addr = listener.local_addr().expect("fixture server addr");
        let state = Arc::new(Mutex::new(ServerState {
            routes: routes.into_iter().collect(),
            hits: HashMap::new(),
        }));
        let shutdown = Arc::new(AtomicBool::new(false));

        let thread_state = Arc::clone(&state);
        let thread_shutdown = Arc::clone(&shutdown);
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if thread_shutdown.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                handle_connection(stream, &thread_state);
            }
        });

        ScriptedServer {
            addr,
            state,
            shutdown,
            handle: Some(handle),
        }
    }

    /// Sticky 200 responses for a set of (path, body) pairs.
    pub fn serving(files: Vec<(String, Vec<u8>)>) -> ScriptedServer {
        ScriptedServer::start(
            files
                .into_iter()
                .map(|(path, body)| (path, vec![CannedResponse::ok(body)]))
                .collect(),
        )
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn hits(&self, path: &str) -> usize {
        self.state
            .lock()
            .expect("server state poisoned")
            .hits
            .get(path)
            .copied()
            .unwrap_or(0)
    }

    pub fn total_hits(&self) -> usize {
        self.state
            .lock()
            .expect("server state poisoned")
            .hits
            .values()
            .sum()
    }

    pub fn add_route(&self, path: &str, script: Vec<CannedResponse>) {
        self.state
            .lock()
            .expect("server state poisoned")
            .routes
            .insert(path.to_string(), script);
    }
}

impl Drop for ScriptedServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // Unblock the accept loop.
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn handle_connection(mut stream: TcpStream, state: &Arc<Mutex<ServerState>>) {
    let _ = stream.set_read_timeout(Some(std::time::Duration::from_secs(5)));
    let mut buffer = Vec::new();
    let mut chunk = [0_u8; 1024];
    // Read until the end of the request headers; fixtures only use GET.
    loop {
        match stream.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => {
                buffer.extend_from_slice(&chunk[..n]);
                if buffer.windows(4).any(|w| w == b"\r\n\r\n") {
                    break;
                }
            }
            Err(_) => return,
        }
    }
    let request = String::from_utf8_lossy(&buffer);
    let Some(first_line) = request.lines().next() else { return };
    let mut parts = first_line.split_whitespace();
    let _method = parts.next();
    let Some(target) = parts.next() else { return };
    let path = target.split('?').next().unwrap_or(target).to_string();
    // The query string distinguishes paginated requests.
    let full_target = target.to_string();

    let response = {
        let mut state = state.lock().expect("server state poisoned");
        let key = if state.routes.contains_key(&full_target) {
            full_target.clone()
        } else {
            path.clone()
        };
        let hit_count = state.hits.entry(key.clone()).or_insert(0);
        *hit_count += 1;
        let nth = *hit_count - 1;
        match state.routes.get(&key) {
            Some(script) if !script.is_empty() => {
                script.get(nth).cloned().unwrap_or_else(|| {
                    script.last().expect("non-empty script").clone()
                })
            }
            _ => CannedResponse {
                status: 404,
                body: b"not found".to_vec(),
                content_type: "text/plain",
            },
        }
    };

    let reason = match response.status {
        200 => "OK",
        404 => "Not Found",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    };
    let header = format!(
        "HTTP/1.1 {} {}\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        response.status,
        reason,
        response.content_type,
        response.body.len()
    );
    let _ = stream.write_all(header.as_bytes());
    let _ = stream.write_all(&response.body);
    let _ = stream.flush();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maven::parse_pom;

    #[test]
    fn fixture_documents_parse() {
        for (coordinate, document) in sdk_common_fixture() {
            let model = parse_pom(&document).unwrap();
            assert_eq!(model.coordinate, coordinate);
        }
    }

    #[test]
    fn scripted_server_serves_and_counts() {
        let server = ScriptedServer::start(vec![(
            "/hello".to_string(),
            vec![CannedResponse::ok("hi")],
        )]);
        let body = ureq::get(&server.url("/hello")).call().unwrap();
        let mut text = String::new();
        body.into_reader().read_to_string(&mut text).unwrap();
        assert_eq!(text, "hi");
        assert_eq!(server.hits("/hello"), 1);

        let missing = ureq::get(&server.url("/nope")).call();
        assert!(missing.is_err());
    }

    #[test]
    fn scripted_sequences_advance_then_stick() {
        let server = ScriptedServer::start(vec![(
            "/flaky".to_string(),
            vec![
                CannedResponse::status(500),
                CannedResponse::ok("recovered"),
            ],
        )]);
        assert!(ureq::get(&server.url("/flaky")).call().is_err());
        assert!(ureq::get(&server.url("/flaky")).call().is_ok());
        assert!(ureq::get(&server.url("/flaky")).call().is_ok());
        assert_eq!(server.hits("/flaky"), 3);
    }
}
