use super::{
    parse_description, AbstractScenario, AbstractionError, AnnotationLog, DescriptionSource,
    SceneDescription,
};
use crate::vocab::Role;
use base64::Engine;
use serde::{Deserialize, Serialize};
use std::time::Duration;

pub const ENV_URL: &str = "SCENFORGE_LLM_URL";
pub const ENV_KEY: &str = "SCENFORGE_LLM_KEY";

/// What a provider is asked to describe.
#[derive(Clone, Debug, Default)]
pub struct ProviderRequest {
    pub prompt: String,
    /// Encoded key-frame images.
    pub images: Vec<Vec<u8>>,
    pub annotation: Option<AnnotationLog>,
}

pub trait SceneProvider {
    fn describe(&self, request: &ProviderRequest) -> Result<SceneDescription, AbstractionError>;
}

/// Deterministic provider that restates an annotation log in the line grammar.
#[derive(Clone, Copy, Debug, Default)]
pub struct MockProvider;

fn spaced(s: &str) -> String {
    s.replace('_', " ")
}

impl SceneProvider for MockProvider {
    fn describe(&self, request: &ProviderRequest) -> Result<SceneDescription, AbstractionError> {
        let log = request.annotation.as_ref().ok_or_else(|| {
            AbstractionError::Config("the mock provider needs an annotation log".into())
        })?;
        log.check()?;
        let mut out = format!("ROAD: {}\n", spaced(&log.road_type));
        if let Some(s) = &log.traffic_signal {
            out += &format!("SIGNAL: {}\n", spaced(s));
        }
        let list = |b: &[String]| b.iter().map(|s| spaced(s)).collect::<Vec<_>>().join(", ");
        let (mut npc, mut ped) = (0, 0);
        for p in log.participants.iter().filter(|p| p.role == Role::Ego) {
            let vt = p.vehicle_type.as_deref().unwrap_or("car");
            out += &format!("EGO: {}; BEHAVIORS: {}\n", spaced(vt), list(&p.behaviors));
        }
        for p in log.participants.iter().filter(|p| p.role != Role::Ego) {
            let pos = spaced(p.relative_position.as_deref().unwrap_or_default());
            match p.role {
                Role::Npc => {
                    npc += 1;
                    let vt = p.vehicle_type.as_deref().unwrap_or_default();
                    out += &format!(
                        "NPC[{npc}]: {}; POS: {pos}; BEHAVIORS: {}\n",
                        spaced(vt),
                        list(&p.behaviors)
                    );
                }
                _ => {
                    ped += 1;
                    out += &format!(
                        "PEDESTRIAN[{ped}]: POS: {pos}; BEHAVIORS: {}\n",
                        list(&p.behaviors)
                    );
                }
            }
        }
        Ok(SceneDescription {
            raw_text: out,
            source: DescriptionSource::Mock,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemoteConfig {
    pub url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_attempts: usize,
}

impl RemoteConfig {
    pub fn from_env() -> Result<Self, AbstractionError> {
        let url = std::env::var(ENV_URL)
            .map_err(|_| AbstractionError::Config(format!("{ENV_URL} is not set")))?;
        Ok(RemoteConfig {
            url,
            api_key: std::env::var(ENV_KEY).ok(),
            timeout: Duration::from_secs(60),
            max_attempts: 3,
        })
    }
}

#[derive(Serialize)]
struct RemoteRequest<'a> {
    prompt: &'a str,
    images: Vec<String>,
    text: String,
}

#[derive(Deserialize)]
struct RemoteReply {
    text: String,
}

/// Provider backed by an HTTP endpoint taking `{prompt, images, text}` and
/// answering `{text}`.
pub struct RemoteProvider {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteProvider {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteProvider { config, agent }
    }

    fn attempt(&self, body: &RemoteRequest<'_>) -> Result<String, String> {
        let mut req = self.agent.post(&self.config.url);
        if let Some(k) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP {}", status.as_u16()));
        }
        let reply: RemoteReply = resp
            .body_mut()
            .read_json()
            .map_err(|e| format!("malformed response: {e}"))?;
        if reply.text.trim().is_empty() {
            return Err("empty response text".into());
        }
        Ok(reply.text)
    }
}

impl SceneProvider for RemoteProvider {
    fn describe(&self, request: &ProviderRequest) -> Result<SceneDescription, AbstractionError> {
        let b64 = base64::engine::general_purpose::STANDARD;
        // the annotation path sends text instead of images
        let text = match &request.annotation {
            Some(log) => MockProvider
                .describe(request)
                .map(|d| d.raw_text)
                .unwrap_or_else(|_| serde_json::to_string(log).unwrap_or_default()),
            None => String::new(),
        };
        let body = RemoteRequest {
            prompt: &request.prompt,
            images: if request.annotation.is_some() {
                Vec::new()
            } else {
                request.images.iter().map(|i| b64.encode(i)).collect()
            },
            text,
        };
        let attempts = self.config.max_attempts.max(1);
        let mut last = String::new();
        for n in 1..=attempts {
            match self.attempt(&body) {
                Ok(raw_text) => {
                    return Ok(SceneDescription {
                        raw_text,
                        source: DescriptionSource::Remote,
                    })
                }
                Err(e) => {
                    log::warn!("provider attempt {n}/{attempts} failed: {e}");
                    last = e;
                }
            }
        }
        Err(AbstractionError::Provider {
            attempts,
            message: last,
        })
    }
}

pub fn describe_scene(
    provider: &dyn SceneProvider,
    request: &ProviderRequest,
) -> Result<SceneDescription, AbstractionError> {
    provider.describe(request)
}

/// Describes and parses, asking again (up to `max_reprompts` times) when
/// the reply does not follow the grammar.
pub fn abstract_scene(
    provider: &dyn SceneProvider,
    request: &ProviderRequest,
    max_reprompts: usize,
) -> Result<(SceneDescription, AbstractScenario), AbstractionError> {
    let mut req = request.clone();
    let mut n = 0;
    loop {
        let desc = provider.describe(&req)?;
        match parse_description(&desc) {
            Ok(s) => return Ok((desc, s)),
            Err(e) if n < max_reprompts => {
                n += 1;
                req.prompt = format!(
                    "{}\n\nYour previous answer could not be read ({e}). Answer again using exactly the line format above.",
                    request.prompt
                );
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::AnnotatedParticipant;
    use super::*;
    use crate::vocab::{Action, RelativePosition, RoadType};
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    fn participant(
        role: Role,
        vt: Option<&str>,
        pos: Option<&str>,
        b: &[&str],
    ) -> AnnotatedParticipant {
        AnnotatedParticipant {
            role,
            vehicle_type: vt.map(String::from),
            relative_position: pos.map(String::from),
            behaviors: b.iter().map(|s| s.to_string()).collect(),
            waypoints: vec![],
        }
    }

    fn table_one() -> AnnotationLog {
        AnnotationLog {
            road_type: "intersection".into(),
            traffic_signal: None,
            participants: vec![
                participant(Role::Ego, Some("car"), None, &["change_lane", "turn_right"]),
                participant(
                    Role::Npc,
                    Some("truck"),
                    Some("left_front"),
                    &["follow_lane", "cross"],
                ),
                participant(
                    Role::Pedestrian,
                    None,
                    Some("right_vertical"),
                    &["stand", "cross"],
                ),
            ],
        }
    }

    #[test]
    fn mock_names_every_category() {
        let req = ProviderRequest {
            annotation: Some(table_one()),
            ..Default::default()
        };
        let d = MockProvider.describe(&req).unwrap();
        for key in [
            "ROAD:",
            "EGO:",
            "NPC[1]:",
            "PEDESTRIAN[1]:",
            "BEHAVIORS:",
            "POS:",
        ] {
            assert!(
                d.raw_text.contains(key),
                "{key} missing from {}",
                d.raw_text
            );
        }
        let (_, s) = abstract_scene(&MockProvider, &req, 0).unwrap();
        assert_eq!(s.road_type, RoadType::Intersection);
        assert_eq!(
            s.participants[2].relative_position,
            Some(RelativePosition::RightVertical)
        );
    }

    #[test]
    fn mock_ego_only() {
        let log = AnnotationLog {
            road_type: "straight".into(),
            traffic_signal: None,
            participants: vec![participant(Role::Ego, Some("car"), None, &["follow_lane"])],
        };
        let req = ProviderRequest {
            annotation: Some(log),
            ..Default::default()
        };
        let (d, s) = abstract_scene(&MockProvider, &req, 0).unwrap();
        assert!(!d.raw_text.contains("NPC"));
        assert_eq!(s.participants.len(), 1);
        assert_eq!(s.participants[0].behaviors, vec![Action::FollowLane]);
    }

    #[test]
    fn mock_requires_annotation() {
        assert!(matches!(
            MockProvider.describe(&ProviderRequest::default()),
            Err(AbstractionError::Config(_))
        ));
    }

    /// Serves the given (status, body) replies in order, one per connection,
    /// and returns the request bodies it saw.
    fn serve(replies: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/describe", listener.local_addr().unwrap());
        let h = std::thread::spawn(move || {
            let mut seen = Vec::new();
            for (status, body) in replies {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream);
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                seen.push(String::from_utf8(buf).unwrap());
                let mut stream = reader.into_inner();
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
            seen
        });
        (url, h)
    }

    fn remote(url: String) -> RemoteProvider {
        RemoteProvider::new(RemoteConfig {
            url,
            api_key: Some("k".into()),
            timeout: Duration::from_secs(5),
            max_attempts: 3,
        })
    }

    #[test]
    fn remote_retries_then_succeeds() {
        let good = serde_json::json!({"text": "ROAD: straight\nEGO: car; BEHAVIORS: follow lane"})
            .to_string();
        let (url, h) = serve(vec![
            (500, "{}".into()),
            (200, "not json".into()),
            (200, good),
        ]);
        let req = ProviderRequest {
            prompt: "p".into(),
            images: vec![vec![1, 2, 3]],
            annotation: None,
        };
        let d = remote(url).describe(&req).unwrap();
        assert_eq!(d.source, DescriptionSource::Remote);
        let seen = h.join().unwrap();
        assert_eq!(seen.len(), 3);
        let body: serde_json::Value = serde_json::from_str(&seen[0]).unwrap();
        assert_eq!(body["prompt"], "p");
        assert_eq!(body["images"][0], "AQID");
    }

    #[test]
    fn remote_gives_up_with_attempt_count() {
        let (url, h) = serve(vec![
            (503, "{}".into()),
            (503, "{}".into()),
            (503, "{}".into()),
        ]);
        let err = remote(url)
            .describe(&ProviderRequest::default())
            .unwrap_err();
        assert!(
            matches!(err, AbstractionError::Provider { attempts: 3, .. }),
            "{err}"
        );
        h.join().unwrap();
    }

    #[test]
    fn remote_unreachable() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", listener.local_addr().unwrap());
        drop(listener);
        let err = remote(url)
            .describe(&ProviderRequest::default())
            .unwrap_err();
        assert!(matches!(
            err,
            AbstractionError::Provider { attempts: 3, .. }
        ));
    }

    #[test]
    fn reprompt_on_unparseable_reply() {
        let bad = serde_json::json!({"text": "The road is straight and I drive on."}).to_string();
        let good = serde_json::json!({"text": "ROAD: straight\nEGO: car; BEHAVIORS: follow lane"})
            .to_string();
        let (url, h) = serve(vec![(200, bad), (200, good)]);
        let req = ProviderRequest {
            prompt: "p".into(),
            ..Default::default()
        };
        let (_, s) = abstract_scene(&remote(url), &req, 2).unwrap();
        assert_eq!(s.road_type, RoadType::Straight);
        let seen = h.join().unwrap();
        assert!(seen[1].contains("could not be read"));
    }
}
