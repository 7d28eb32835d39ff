"""Regenerates the shipped synthetic corpora. Output is deterministic."""
import os, random, shutil
random.seed(20170)
ROOT = os.path.dirname(os.path.abspath(__file__))

TRAVEL = [
 "Plan each trip with offline maps and a smart itinerary for each destination.",
 "Book hotels and flights in seconds and keep all your reservations in one place.",
 "Find the best restaurants, museums and tours near your hotel while you travel.",
 "Check airport terminals, gate changes and flight delays before you leave for the airport.",
 "Track your luggage and store your passport details safely for every journey abroad.",
 "Discover local transportation schedules, train timetables and taxi fares in any city.",
 "Send your vacation itinerary to fellow travelers and get directions to each landmark on the map.",
 "Convert currency and find ATM machines close to your hotel during your holiday trip.",
 "Browse travel guides written by locals and explore hidden beaches and mountain trails.",
 "Our trip planner suggests destinations, hotel deals and cheap flights for your next vacation.",
 "Get tourist information, sightseeing tours and walking routes for the city you are visiting.",
 "Travelers love our booking engine for hostels, resorts and rental apartments worldwide.",
]
BOOKS = [
 "Read thousands of free ebooks and novels from your favorite authors.",
 "Organize your library, bookmark a chapter and continue reading where you left off.",
 "Adjust the font, page color and brightness for comfortable reading at night.",
 "Listen to audiobooks narrated by professional readers while you commute or relax.",
 "Join a reading club, write reviews and discuss each story with other book lovers.",
 "Download classic literature, poetry and short stories to your personal library.",
 "Highlight quotes, add notes to every page and export them to your notebook.",
 "Get personalized book recommendations based on the authors and genres you read.",
 "Our reader supports epub and pdf books and syncs your bookmarks and chapters.",
 "Browse bestselling novels, comics and magazines in the largest digital bookstore.",
]
PHOTO = [
 "Take stunning photos with manual camera controls, exposure and focus settings.",
 "Edit each picture with filters, crop tools and color correction in one tap.",
 "Create collages and albums from your gallery and print your best shots.",
 "Remove blemishes from a selfie and apply portrait lens effects to your images.",
 "Our camera supports raw capture, panorama mode and night shots with less noise.",
 "Add frames, stickers and text to each photo before you post it online.",
 "Sort your gallery by faces and dates and back up each album.",
 "Retouch landscape pictures with curves, sharpening and vintage film filters.",
 "Scan documents with the camera and turn each photo into a sharp black and white image.",
 "Record slow motion video and take burst photos of moving subjects with ease.",
]

def desc(name, pool, rng, n=5):
    sents = rng.sample(pool, n)
    return f"{name}. " + " ".join(sents)

# API per permission group, used to write programs
SRC = {"GPS": "getLastKnownLocation", "Contacts": "queryContacts", "Accounts": "getAccounts",
       "Camera": "takePicture", "NFC": "readNdefMessage"}
SNK = {"Internet": "openConnection", "SMS": "sendTextMessage", "Bluetooth": "bluetoothWrite"}

def program(flows, rng):
    """Straight-line program realizing exactly `flows` (set of (src,sink))."""
    lines = ["component MainActivity public {"]
    services = []
    by_src = {}
    for s, k in sorted(flows):
        by_src.setdefault(s, []).append(k)
    for s, sinks in sorted(by_src.items()):
        var = s.lower() + "Data"
        lines.append(f"    {var} = source {SRC[s]}")
        for k in sinks:
            if rng.random() < 0.5:
                svc = f"{s}{k}Service"
                lines.append(f"    send {svc}({var})")
                services.append((svc, k))
            else:
                msg = f"{s.lower()}{k}Msg"
                lines.append(f"    {msg} = assign({var})")
                lines.append(f"    sink {SNK[k]}({msg})")
    lines.append("}")
    for svc, k in services:
        lines += ["", f"component {svc} private {{", "    payload = recv",
                  f"    sink {SNK[k]}(payload)", "}"]
    return "\n".join(lines) + "\n"

def write(path, app_id, category, description, prog):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        f.write(f"@id {app_id}\n")
        if category:
            f.write(f"@category {category}\n")
        f.write("@description\n")
        # wrap description at ~90 columns
        words, line = description.split(), ""
        out = []
        for w in words:
            if len(line) + len(w) + 1 > 90:
                out.append(line); line = w
            else:
                line = (line + " " + w).strip()
        out.append(line)
        f.write("\n".join(out) + "\n")
        f.write("@program\n")
        f.write(prog)

GI, GS, GB = ("GPS","Internet"), ("GPS","SMS"), ("GPS","Bluetooth")
CS, CB, CI = ("Contacts","SMS"), ("Contacts","Bluetooth"), ("Contacts","Internet")
AI, CamI = ("Accounts","Internet"), ("Camera","Internet")

# ---------- running example ----------
rx = os.path.join(ROOT, "running_example")
shutil.rmtree(rx, ignore_errors=True)
rng = random.Random(7)
travel_flows = [
    {GI, CS},              # BestTravel
    {GI, GS, GB}, {GI, GS, GB}, {GI, GS, GB, CB},
    {GI, GS, CS, CB}, {GI, GS, CS, CB}, {GI, GS, CS, CB}, {GI, GS, CS, CB}, {GI, GS, CS, CB},
    {GI, CS, CB}, {CB}, set(),
]
travel_names = ["BestTravel", "TripMate", "GlobeTrotter", "JetSetGo", "Wanderly", "RoadBuddy",
                "CityHopper", "PackLight", "FlyAway", "TourGuidePro", "BackpackerBox", "HolidayDesk"]
for i, (name, flows) in enumerate(zip(travel_names, travel_flows)):
    if name == "BestTravel":
        d = ("The ultimate and most convenient way of traveling. Use BestTravel while on the move, "
             "to find restaurants (including pictures and prices), local transportation schedule, "
             "ATM machines and much more. Book hotels and flights in seconds and keep all your "
             "reservations in one place.")
    else:
        d = desc(name, TRAVEL, rng)
    write(f"{rx}/trusted/travel/{name.lower()}.app", f"com.example.{name.lower()}", "Travel", d, program(flows, rng))
books = [("ReadMore", {AI}), ("PageTurner", {AI}), ("NovelNest", {AI, CI}), ("ShelfLife", {AI}),
         ("InkWell", {AI}), ("ChapterOne", set())]
for name, flows in books:
    write(f"{rx}/trusted/books/{name.lower()}.app", f"com.example.{name.lower()}", "Books", desc(name, BOOKS, rng), program(flows, rng))
photos = [("SnapPro", {CamI}), ("PixelPerfect", {CamI, GI}), ("LensCraft", {CamI}), ("FrameIt", {CamI}),
          ("ShutterBug", {CamI, GI}), ("GalleryGo", set())]
for name, flows in photos:
    write(f"{rx}/trusted/photography/{name.lower()}.app", f"com.example.{name.lower()}", "Photography", desc(name, PHOTO, rng), program(flows, rng))
trip_desc = ("TripOrganizer keeps your whole vacation in one place. Plan each trip with offline maps "
             "and a smart itinerary for each destination. Book hotels and flights and share your "
             "travel plans with friends while you explore the city.")
trip_prog = """component MainActivity public {
    contacts = source queryContacts
    invite = assign(contacts)
    sink sendTextMessage(invite)
    send BackupService(contacts)
    position = source getLastKnownLocation
    send BeaconService(position)
}

component BackupService private {
    entries = recv
    sink openConnection(entries)
}

component BeaconService private {
    where = recv
    sink bluetoothWrite(where)
}
"""
write(f"{rx}/aua/triporganizer.app", "com.example.triporganizer", "Travel", trip_desc, trip_prog)
write(f"{rx}/aua/quietmaps.app", "com.example.quietmaps", "Travel",
      "QuietMaps is a simple offline map for your trip. " + " ".join(TRAVEL[:3]), program(set(), rng))
with open(f"{rx}/topic_labels.txt", "w") as f:
    f.write("# <Label> <anchor words...>\nTravel travel trip hotel flight\nBooks book read novel library\nPhotography photo camera picture filter\n")

# ---------- ablation ----------
ab = os.path.join(ROOT, "ablation")
shutil.rmtree(ab, ignore_errors=True)
rng = random.Random(11)
travel_ab = [{GI, GS, GB, CS, CB}] * 8 + [{GI, CS, AI}]
for i, flows in enumerate(travel_ab):
    name = f"Voyager{i}"
    write(f"{ab}/trusted/travel/{name.lower()}.app", f"com.ablation.{name.lower()}", "Travel", desc(name, TRAVEL, rng), program(flows, rng))
for i in range(9):
    name = f"Bookworm{i}"
    write(f"{ab}/trusted/books/{name.lower()}.app", f"com.ablation.{name.lower()}", "Books", desc(name, BOOKS, rng), program({AI}, rng))
write(f"{ab}/aua/accountsync.app", "com.ablation.accountsync", "Travel",
      "AccountSync Travel keeps your trips organized. " + " ".join(TRAVEL[3:7]), program({GI, AI}, rng))
write(f"{ab}/aua/nfctrip.app", "com.ablation.nfctrip", "Travel",
      "NfcTrip lets you tap your ticket at the gate. " + " ".join(TRAVEL[6:10]),
      """component MainActivity public {
    tag = source readNdefMessage
    sink sendTextMessage(tag)
}
""")
write(f"{ab}/aua/plaintrip.app", "com.ablation.plaintrip", "Travel",
      "PlainTrip is a plain travel companion. " + " ".join(TRAVEL[1:5]), program({GI, GS}, rng))
with open(f"{ab}/topic_labels.txt", "w") as f:
    f.write("Travel travel trip hotel flight\nBooks book read novel library\n")
print("ok")
