#!/usr/bin/env python3
"""Regenerates the committed fixtures under data/. Deterministic (fixed seed).

Run from the repo root: python3 scripts/make_fixtures.py
The language profiles are built afterwards with `xbc train-lang`.
"""
import json
import os
import random

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")
rng = random.Random(20240611)


def write(path, text):
    path = os.path.join(ROOT, path)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def fnv1a(s):
    h = 0xCBF29CE484222325
    for b in s.encode("utf-8"):
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


# ---------------------------------------------------------------- resources

RESOURCES = {
    "en": {
        "stopwords": "a an the this that is are was were be been of to in on at by for with from and or "
                     "as it its into after before via using than then".split(),
        "lemmas": [("running", "run"), ("ran", "run"), ("runs", "run"), ("breached", "breach"),
                   ("exfiltrated", "exfiltrate"), ("servers", "server"), ("hosts", "host"),
                   ("analysts", "analyst"), ("used", "use"), ("deployed", "deploy"),
                   ("observed", "observe"), ("was", "be"), ("is", "be"), ("are", "be")],
        "stem_rules": [("ational", 3), ("ing", 3), ("ed", 3), ("ly", 3), ("es", 3), ("s", 3)],
        "synonyms": [("server", "host", "machine"), ("analysts", "researchers"), ("report", "state"),
                     ("data", "files"), ("attack", "campaign"), ("network", "environment")],
        "translate": [("analysts", "analistas"), ("report", "informan"), ("that", "que"),
                      ("the", "el"), ("server", "servidor"), ("data", "datos"), ("to", "a"),
                      ("with", "con"), ("using", "usando"), ("after", "tras"), ("via", "mediante"),
                      ("network", "red"), ("attack", "ataque"), ("new", "nuevo")],
    },
    "es": {
        "stopwords": "el la los las un una de del a al en con por para que y o se su sus hacia tras "
                     "mediante es son fue".split(),
        "lemmas": [("comprometió", "comprometer"), ("filtró", "filtrar"), ("servidores", "servidor"),
                   ("datos", "dato"), ("analistas", "analista"), ("usando", "usar")],
        "stem_rules": [("ación", 3), ("mente", 3), ("ando", 3), ("ió", 3), ("es", 3), ("s", 3)],
        "synonyms": [("servidor", "equipo"), ("datos", "archivos"), ("red", "entorno")],
        "translate": [("analistas", "analysts"), ("informan", "report"), ("que", "that"),
                      ("el", "the"), ("servidor", "server"), ("datos", "data"), ("con", "with"),
                      ("usando", "using"), ("tras", "after"), ("mediante", "via"), ("red", "network")],
    },
    "ru": {
        "stopwords": "и в во не на с со что как а по из к у за от о же".split(),
        "lemmas": [("серверы", "сервер"), ("данные", "данные")],
        "stem_rules": [("ами", 3), ("ов", 3), ("ы", 3), ("и", 3)],
    },
    "el": {
        "stopwords": "και το τα η ο οι της του των σε με για από στο στη στην".split(),
        "lemmas": [("διακομιστές", "διακομιστής")],
        "stem_rules": [("ές", 3), ("ος", 3), ("ες", 3)],
    },
}

for lang, r in RESOURCES.items():
    write(f"resources/{lang}/stopwords.txt", "\n".join(r["stopwords"]) + "\n")
    write(f"resources/{lang}/lemmas.tsv", "".join(f"{a}\t{b}\n" for a, b in r["lemmas"]))
    write(f"resources/{lang}/stem_rules.tsv", "".join(f"{a}\t{b}\n" for a, b in r["stem_rules"]))
    if "synonyms" in r:
        write(f"resources/{lang}/synonyms.tsv", "".join("\t".join(row) + "\n" for row in r["synonyms"]))
    if "translate" in r:
        write(f"resources/{lang}/translate.tsv", "".join(f"{a}\t{b}\n" for a, b in r["translate"]))

# ---------------------------------------------------------------- CTI fixture

ACTORS = ["apt28", "fancy bear", "lazarus group", "sandworm", "turla"]
MALWARE = ["emotet", "cobalt strike", "trickbot", "qakbot"]
TECHNIQUES = ["T1566.001", "T1059", "T1071.001", "T1486"]
IPS = ["185.220.101.4", "45.9.148.21", "103.75.201.2", "91.219.236.18"]
EVENTS_EN = ["breached", "exfiltrated", "compromised"]
EVENTS_ES = ["comprometió", "filtró"]

gazetteer = [(a, "ACTOR") for a in ACTORS] + [(m, "MALWARE") for m in MALWARE]
gazetteer += [(e, "EVENT") for e in EVENTS_EN + EVENTS_ES]
write("fixtures/cti/gazetteer.tsv", "# phrase\ttype\n" + "".join(f"{p}\t{t}\n" for p, t in gazetteer))
write("fixtures/cti/schema.json",
      json.dumps({"entity_types": ["ACTOR", "IP", "TECHNIQUE", "MALWARE", "EVENT"]}, indent=1) + "\n")

EN_TEMPLATES = [
    "{actor} {event} the server {ip} using {malware} .",
    "Analysts report that {actor} {event} data to {ip} via {tech} .",
    "{malware} traffic to {ip} was linked to {actor} ( {tech} ) .",
    "The {actor} operators {event} a network after {tech} with {malware} .",
]
ES_TEMPLATES = [
    "{actor} {event} el servidor {ip} con {malware} .",
    "Los analistas informan que {actor} {event} datos hacia {ip} mediante {tech} .",
    "El tráfico de {malware} hacia {ip} fue atribuido a {actor} ( {tech} ) .",
    "Los operadores de {actor} {event} la red tras {tech} con {malware} .",
]


def cti_sentence(templates, events, i):
    t = templates[i % len(templates)]
    return t.format(actor=rng.choice(ACTORS), malware=rng.choice(MALWARE), tech=rng.choice(TECHNIQUES),
                    ip=rng.choice(IPS), event=rng.choice(events))


en = [cti_sentence(EN_TEMPLATES, EVENTS_EN, i) for i in range(20)]
es = [cti_sentence(ES_TEMPLATES, EVENTS_ES, i) for i in range(20)]
assert len(set(en)) == 20 and len(set(es)) == 20, "duplicate fixture sentence; change the seed"
write("fixtures/cti/feed_en.jsonl",
      "".join(json.dumps({"text": s, "feed": "osint-en"}, ensure_ascii=False) + "\n" for s in en))
write("fixtures/cti/feed_es.txt", "".join(s + "\n" for s in es))

vocab = set()
for s in en + es:
    vocab.update(s.lower().replace("(", " ").replace(")", " ").split())
buckets = {}
for w in sorted(vocab):
    buckets.setdefault(fnv1a(w) % 4096, []).append(w)
collisions = [v for v in buckets.values() if len(v) > 1]
print("fixture vocabulary", len(vocab), "bucket collisions", collisions)

config = {
    "sources": [
        {"source_id": "osint-en", "kind": "file", "location": "feed_en.jsonl", "format_hint": "json_lines"},
        {"source_id": "osint-es", "kind": "file", "location": "feed_es.txt", "format_hint": "plain_text"},
    ],
    "fetched_at": "2024-05-01T00:00:00Z",
    "langid": {"profiles": "../../langid/profiles.json", "min_chars": 10, "default_lang": "en"},
    "resources_dir": "../../resources",
    "schema": "schema.json",
    "gazetteer": "gazetteer.tsv",
    "embedder": {"backend": "hashed", "text_channel": "normalized"},
    "train": {"dev_split": 0.2},
    "seed": 7,
    "workdir": "work",
}
write("fixtures/cti/config.json", json.dumps(config, indent=2) + "\n")

# ---------------------------------------------------------------- multi-token fixture

MT_ACTORS = ["fancy bear", "lazarus group", "charming kitten", "wizard spider team", "cozy bear"]
MT_MALWARE = ["cobalt strike", "black basta loader", "agent tesla", "remcos rat"]
MT_TEMPLATES = [
    ["{A}", "deployed", "{M}", "against", "a", "bank", "."],
    ["researchers", "tied", "{M}", "to", "{A}", "."],
    ["the", "{A}", "crew", "reused", "{M}", "again", "."],
    ["{M}", "samples", "from", "{A}", "were", "found", "."],
]


def mt_sentence():
    t = rng.choice(MT_TEMPLATES)
    toks, labs = [], []
    fills = {"{A}": (rng.choice(MT_ACTORS), "ACTOR"), "{M}": (rng.choice(MT_MALWARE), "MALWARE")}
    for slot in t:
        if slot in fills:
            words, typ = fills[slot]
            for k, w in enumerate(words.split()):
                toks.append(w)
                labs.append(("B-" if k == 0 else "I-") + typ)
        else:
            toks.append(slot)
            labs.append("O")
    return toks, labs


def conll(n):
    out = []
    for _ in range(n):
        toks, labs = mt_sentence()
        out.append("".join(f"{t}\t{l}\n" for t, l in zip(toks, labs)))
    return "\n".join(out)


write("fixtures/multitoken/train.conll", conll(60))
write("fixtures/multitoken/dev.conll", conll(20))
write("fixtures/multitoken/schema.json",
      json.dumps({"entity_types": ["ACTOR", "MALWARE"]}, indent=1) + "\n")

# ---------------------------------------------------------------- language id

SEED = {
    "en": """Security teams monitor network traffic for signs of intrusion every day.
The attackers sent phishing emails with malicious attachments to employees.
Researchers published a detailed report about the new ransomware campaign.
Our analysts believe the group is motivated by financial gain.
Patch management remains one of the most effective defensive measures.
The malware establishes persistence by creating a scheduled task.
Threat intelligence sharing helps organizations respond faster to attacks.
Several government agencies were targeted during the summer months.
The command and control servers were hosted by a bulletproof provider.
Incident responders isolated the infected machines from the network.
Credentials stolen from the help desk were sold on underground forums.
We recommend enabling multi factor authentication for all accounts.
The vulnerability allows remote attackers to execute arbitrary code.
Logs from the firewall showed repeated connections to unknown hosts.
The campaign used a watering hole attack against industry websites.
Investigators recovered encrypted archives containing customer records.
The actor relies on legitimate administration tools to move laterally.
Backups should be tested regularly and stored offline.
A spear phishing message impersonated the finance department.
The exploit kit delivered a banking trojan to unpatched browsers.
Most of the activity happened outside normal business hours.
The report describes how the intruders escalated their privileges.
This paper is a conceptual model for extracting knowledge from text.
Defenders should watch for unusual authentication patterns at night.""",
    "es": """Los equipos de seguridad vigilan el tráfico de red cada día.
Los atacantes enviaron correos de phishing con archivos adjuntos maliciosos.
Los investigadores publicaron un informe detallado sobre la nueva campaña.
Nuestros analistas creen que el grupo busca un beneficio económico.
La gestión de parches sigue siendo una de las mejores defensas.
El malware crea una tarea programada para mantener la persistencia.
Compartir inteligencia de amenazas ayuda a responder más rápido.
Varias agencias del gobierno fueron atacadas durante el verano.
Los servidores de mando y control estaban alojados en otro país.
Los equipos de respuesta aislaron las máquinas infectadas de la red.
Las credenciales robadas se vendieron en foros clandestinos.
Recomendamos activar la autenticación de varios factores en todas las cuentas.
La vulnerabilidad permite a los atacantes ejecutar código arbitrario.
Los registros del cortafuegos mostraron conexiones repetidas a equipos desconocidos.
La campaña utilizó sitios web legítimos comprometidos por los delincuentes.
Los investigadores recuperaron archivos cifrados con datos de clientes.
El actor utiliza herramientas de administración legítimas para moverse.
Las copias de seguridad deben probarse y guardarse fuera de línea.
Un mensaje falso suplantó al departamento de finanzas de la empresa.
La mayor parte de la actividad ocurrió fuera del horario laboral.
El informe describe cómo los intrusos elevaron sus privilegios.
Los defensores deben vigilar patrones de autenticación inusuales por la noche.""",
    "ru": """Команды безопасности каждый день следят за сетевым трафиком.
Злоумышленники отправили сотрудникам письма с вредоносными вложениями.
Исследователи опубликовали подробный отчёт о новой кампании вымогателей.
Наши аналитики считают, что группа преследует финансовую выгоду.
Своевременная установка обновлений остаётся одной из лучших мер защиты.
Вредоносная программа создаёт задачу в планировщике для закрепления.
Обмен данными об угрозах помогает быстрее реагировать на атаки.
Летом атакам подверглись несколько государственных ведомств.
Серверы управления размещались у недобросовестного провайдера.
Специалисты изолировали заражённые компьютеры от сети.
Украденные учётные данные продавались на закрытых форумах.
Мы рекомендуем включить многофакторную аутентификацию для всех учётных записей.
Уязвимость позволяет удалённо выполнить произвольный код.
Журналы межсетевого экрана показали повторные подключения к неизвестным узлам.
Следователи восстановили зашифрованные архивы с данными клиентов.
Группа использует легитимные средства администрирования для перемещения по сети.
Резервные копии нужно регулярно проверять и хранить отдельно.
Большая часть активности происходила в нерабочее время.
В отчёте описано, как злоумышленники повысили свои привилегии.
Защитникам стоит обращать внимание на необычные входы ночью.""",
    "el": """Οι ομάδες ασφαλείας παρακολουθούν την κίνηση του δικτύου κάθε μέρα.
Οι επιτιθέμενοι έστειλαν μηνύματα ηλεκτρονικού ψαρέματος στους υπαλλήλους.
Οι ερευνητές δημοσίευσαν λεπτομερή αναφορά για τη νέα εκστρατεία.
Οι αναλυτές μας πιστεύουν ότι η ομάδα επιδιώκει οικονομικό όφελος.
Η έγκαιρη ενημέρωση λογισμικού παραμένει από τα καλύτερα μέτρα προστασίας.
Το κακόβουλο λογισμικό δημιουργεί προγραμματισμένη εργασία για να παραμείνει.
Η ανταλλαγή πληροφοριών για απειλές βοηθά στην ταχύτερη αντίδραση.
Αρκετοί κρατικοί φορείς δέχτηκαν επιθέσεις κατά τη διάρκεια του καλοκαιριού.
Οι διακομιστές ελέγχου φιλοξενούνταν από ύποπτο πάροχο.
Οι ειδικοί απομόνωσαν τους μολυσμένους υπολογιστές από το δίκτυο.
Τα κλεμμένα διαπιστευτήρια πωλήθηκαν σε κλειστά φόρουμ.
Συνιστούμε την ενεργοποίηση πολυπαραγοντικού ελέγχου ταυτότητας σε όλους τους λογαριασμούς.
Η ευπάθεια επιτρέπει την απομακρυσμένη εκτέλεση αυθαίρετου κώδικα.
Τα αρχεία καταγραφής έδειξαν επαναλαμβανόμενες συνδέσεις σε άγνωστους κόμβους.
Οι ερευνητές ανέκτησαν κρυπτογραφημένα αρχεία με δεδομένα πελατών.
Η ομάδα χρησιμοποιεί νόμιμα εργαλεία διαχείρισης για να κινηθεί στο δίκτυο.
Τα αντίγραφα ασφαλείας πρέπει να ελέγχονται τακτικά.
Το μεγαλύτερο μέρος της δραστηριότητας έγινε εκτός ωραρίου.
Η αναφορά περιγράφει πώς οι εισβολείς απέκτησαν αυξημένα δικαιώματα.
Οι αμυνόμενοι πρέπει να προσέχουν ασυνήθιστες συνδέσεις τη νύχτα.""",
}
for lang, text in SEED.items():
    write(f"langid/train/{lang}.txt", text.strip() + "\n")

# Held-out sentences: fresh word sequences drawn from per-language word lists
# that are disjoint from the seed text where practical.
HELDOUT_WORDS = {
    "en": "window garden river morning bright quickly house teacher students market winter yellow "
          "mountain village kitchen bread music quiet small ancient bridge letters summer evening "
          "friends walked slowly through the old town before dinner and after lunch".split(),
    "ru": "окно сад река утро светлый быстро дом учитель студенты рынок зима жёлтый гора деревня "
          "кухня хлеб музыка тихий маленький древний мост письма лето вечер друзья шли медленно "
          "через старый город перед ужином и после обеда".split(),
    "el": "παράθυρο κήπος ποτάμι πρωί φωτεινός γρήγορα σπίτι δάσκαλος μαθητές αγορά χειμώνας "
          "κίτρινος βουνό χωριό κουζίνα ψωμί μουσική ήσυχος μικρός αρχαίος γέφυρα γράμματα "
          "καλοκαίρι βράδυ φίλοι περπάτησαν αργά μέσα στην παλιά πόλη πριν το δείπνο".split(),
}
for lang, words in HELDOUT_WORDS.items():
    lines = []
    for _ in range(120):
        n = rng.randint(4, 10)
        lines.append(" ".join(rng.choice(words) for _ in range(n)))
    write(f"langid/heldout/{lang}.txt", "\n".join(lines) + "\n")
